// wmsv: command-line front end for the exact simulation experiments.

#include "wmsv/wmsv.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <clocale>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace wmsv;

namespace {

constexpr std::uint64_t kDefaultSeed = 20100101;

[[noreturn]] void config_error(const std::string& msg) { throw Error(Errc::ConfigInvalid, msg); }

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  std::variant<ModelParams, HestonParams> model;
  double strike = 1.0;
  std::size_t paths = 100000;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  CondSimOptions sim;
  PricingOptions pricing;
  std::vector<int> euler_steps;
  std::optional<double> bk_h;
  std::optional<int> bk_N;
  std::string output = "out";
  json echo;

  bool is_heston() const { return std::holds_alternative<HestonParams>(model); }
  ModelParams wmsv() const {
    return is_heston() ? to_wmsv(std::get<HestonParams>(model)) : std::get<ModelParams>(model);
  }
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) config_error("missing '" + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error("bad value for '" + key + "' in " + where + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

Mat read_matrix(const json& j, const std::string& key, int d) {
  const auto rows = get<std::vector<std::vector<double>>>(j, key, "wmsv");
  if (static_cast<int>(rows.size()) != d) config_error(key + " must have " + std::to_string(d) + " rows");
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d) config_error(key + " must be " + std::to_string(d) + " x " + std::to_string(d));
    for (int j2 = 0; j2 < d; ++j2) m(i, j2) = rows[i][j2];
  }
  return m;
}

ModelParams read_wmsv(const json& j) {
  check_keys(j, {"d", "delta", "r", "y", "T", "x", "H", "Sigma", "R"}, "wmsv");
  ModelParams p;
  p.d = get<int>(j, "d", "wmsv");
  if (p.d < 1 || p.d > kMaxDim) config_error("wmsv.d must lie in [1, 5]");
  p.delta = get<double>(j, "delta", "wmsv");
  p.r = get_or<double>(j, "r", 0.0, "wmsv");
  p.y = get_or<double>(j, "y", 0.0, "wmsv");
  p.T = get<double>(j, "T", "wmsv");
  p.x = read_matrix(j, "x", p.d);
  p.H = read_matrix(j, "H", p.d);
  p.Sigma = read_matrix(j, "Sigma", p.d);
  p.R = read_matrix(j, "R", p.d);
  return p;
}

HestonParams read_heston(const json& j) {
  check_keys(j, {"kappa", "theta", "sigma", "rho", "r", "x", "y", "S0", "T"}, "heston");
  HestonParams hp;
  hp.kappa = get<double>(j, "kappa", "heston");
  hp.theta = get<double>(j, "theta", "heston");
  hp.sigma = get<double>(j, "sigma", "heston");
  hp.rho = get<double>(j, "rho", "heston");
  hp.r = get_or<double>(j, "r", 0.0, "heston");
  hp.x = get<double>(j, "x", "heston");
  hp.T = get<double>(j, "T", "heston");
  if (j.contains("y") && j.contains("S0")) config_error("give either heston.y or heston.S0, not both");
  hp.y = j.contains("S0") ? std::log(get<double>(j, "S0", "heston")) : get_or<double>(j, "y", 0.0, "heston");
  return hp;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    config_error(std::string("parse error: ") + e.what());
  }
  check_keys(j, {"experiment", "description", "wmsv", "heston", "strike", "paths", "seed", "workers", "simulation",
                 "pricing", "euler", "broadie_kaya", "output"},
             "config");
  RunConfig c;
  c.echo = j;
  if (j.contains("wmsv") == j.contains("heston")) config_error("exactly one of 'wmsv' and 'heston' is required");
  if (j.contains("wmsv")) {
    c.model = read_wmsv(j["wmsv"]);
  } else {
    c.model = read_heston(j["heston"]);
  }
  c.strike = get_or<double>(j, "strike", 1.0, "config");
  if (!(c.strike > 0.0)) config_error("strike must be positive");
  const auto paths = get_or<long long>(j, "paths", 100000, "config");
  if (paths < 1) config_error("paths must be at least 1");
  c.paths = static_cast<std::size_t>(paths);
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "config");
  if (j.contains("workers")) c.workers = get<int>(j, "workers", "config");
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    check_keys(s, {"eps", "c1", "c2", "lambda_fd"}, "simulation");
    c.sim.eps = get_or<double>(s, "eps", c.sim.eps, "simulation");
    c.sim.c1 = get_or<double>(s, "c1", c.sim.c1, "simulation");
    c.sim.c2 = get_or<double>(s, "c2", c.sim.c2, "simulation");
    c.sim.lambda_fd = get_or<double>(s, "lambda_fd", c.sim.lambda_fd, "simulation");
    if (!(c.sim.eps > 0.0 && c.sim.eps < 1.0)) config_error("simulation.eps must lie in (0, 1)");
    if (!(c.sim.c1 >= 0.0 && c.sim.c2 >= 0.0 && c.sim.lambda_fd > 0.0)) config_error("bad simulation constants");
  }
  if (j.contains("pricing")) {
    const json& s = j["pricing"];
    check_keys(s, {"alpha", "ode_tol"}, "pricing");
    c.pricing.alpha = get_or<double>(s, "alpha", c.pricing.alpha, "pricing");
    c.pricing.ode_tol = get_or<double>(s, "ode_tol", c.pricing.ode_tol, "pricing");
  }
  if (j.contains("euler")) {
    const json& s = j["euler"];
    check_keys(s, {"n_steps"}, "euler");
    c.euler_steps = get<std::vector<int>>(s, "n_steps", "euler");
    for (int n : c.euler_steps)
      if (n < 1) config_error("euler.n_steps entries must be >= 1");
  }
  if (j.contains("broadie_kaya")) {
    const json& s = j["broadie_kaya"];
    check_keys(s, {"h", "N"}, "broadie_kaya");
    c.bk_h = get<double>(s, "h", "broadie_kaya");
    c.bk_N = get<int>(s, "N", "broadie_kaya");
    if (!(*c.bk_h > 0.0 && *c.bk_N >= 1)) config_error("broadie_kaya needs h > 0 and N >= 1");
  }
  c.output = get_or<std::string>(j, "output", c.output, "config");
  // Re-validate the model against the module invariants.
  try {
    if (c.is_heston()) std::get<HestonParams>(c.model).validate();
    c.wmsv().validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Output

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct PriceRow {
  std::string method;
  int n_steps = 0;
  std::size_t L = 0;
  McResult mc;
  double reference = 0.0;
  double seconds = 0.0;
};

void write_prices(const fs::path& file, const std::vector<PriceRow>& rows) {
  std::ofstream out(file);
  out << "method,n_steps,L,estimate,std_error,ci_low,ci_high,reference,covered,seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.n_steps << ',' << r.L << ',' << num(r.mc.estimate) << ',' << num(r.mc.std_error) << ','
        << num(r.mc.ci_low) << ',' << num(r.mc.ci_high) << ',' << num(r.reference) << ','
        << (r.mc.covers(r.reference) ? 1 : 0) << ',' << num(r.seconds) << '\n';
  }
}

void write_samples(const fs::path& file, int d, const std::vector<double>& y, const std::vector<double>& x) {
  std::ofstream out(file);
  out << "path_id,y_T";
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out << ",x_T_" << i << '_' << j;
  out << '\n';
  for (std::size_t l = 0; l < y.size(); ++l) {
    out << l << ',' << num(y[l]);
    for (int k = 0; k < d * d; ++k) out << ',' << num(x[l * d * d + k]);
    out << '\n';
  }
}

json row_json(const PriceRow& r) {
  return {{"method", r.method},       {"n_steps", r.n_steps},       {"L", r.L},
          {"estimate", r.mc.estimate}, {"std_error", r.mc.std_error}, {"reference", r.reference},
          {"covered", r.mc.covers(r.reference)}, {"seconds", r.seconds}, {"clamp_fraction", r.mc.clamp_fraction}};
}

json sim_json(const SimulationResult& s) {
  return {{"grid", {{"h", s.grid.h}, {"N", s.grid.N}, {"l_eps", s.grid.l_eps}, {"eps", s.grid.eps}}},
          {"clamp_fraction", s.clamp_fraction},
          {"truncation_flag_fraction", s.truncation_flag_fraction},
          {"bisection_fraction", s.bisection_fraction},
          {"seconds",
           {{"terminal", s.times.terminal},
            {"moments", s.times.moments},
            {"grid", s.times.grid},
            {"table", s.times.table},
            {"inversion", s.times.inversion},
            {"total", s.times.total()}}}};
}

// ---------------------------------------------------------------------------
// Experiments

struct Context {
  RunConfig cfg;
  std::string command;
  std::uint64_t seed = kDefaultSeed;
  std::string seed_source;
  int workers = 1;
  fs::path out;
  json manifest;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SimulationResult run_exact(Context& ctx) {
  const auto& c = ctx.cfg;
  SimulationResult s;
  if (c.is_heston()) {
    s = simulate(HestonCondCf(std::get<HestonParams>(c.model)), c.paths, ctx.seed, c.sim, ctx.workers);
  } else {
    s = simulate(WmsvCondCf(c.wmsv()), c.paths, ctx.seed, c.sim, ctx.workers);
  }
  ctx.manifest["exact"] = sim_json(s);
  return s;
}

double reference_price(Context& ctx) {
  const auto t0 = Clock::now();
  const double ref = call_price_reference(ctx.cfg.wmsv(), ctx.cfg.strike, ctx.cfg.pricing);
  ctx.manifest["reference"] = {{"price", ref}, {"seconds", since(t0)}, {"alpha", ctx.cfg.pricing.alpha}};
  return ref;
}

PriceRow exact_row(Context& ctx, double ref) {
  const ModelParams p = ctx.cfg.wmsv();
  const auto t0 = Clock::now();
  const auto sim = run_exact(ctx);
  PriceRow row{"exact", 0, ctx.cfg.paths, mc_call_price(sim.y_T, p.r, p.T, ctx.cfg.strike), ref, since(t0)};
  row.mc.clamp_fraction = sim.clamp_fraction;
  row.mc.seconds = row.seconds;
  return row;
}

PriceRow euler_row(Context& ctx, int n, double ref) {
  const ModelParams p = ctx.cfg.wmsv();
  const auto t0 = Clock::now();
  const auto res = simulate_euler(p, EulerConfig{n}, ctx.cfg.paths, ctx.seed, ctx.workers);
  PriceRow row{"euler", n, ctx.cfg.paths, mc_call_price(res.y_T, p.r, p.T, ctx.cfg.strike), ref, since(t0)};
  row.mc.seconds = row.seconds;
  ctx.manifest["euler"][std::to_string(n)] = {{"truncation_fraction", res.truncation_fraction},
                                              {"seconds", row.seconds}};
  return row;
}

void finish_prices(Context& ctx, const std::vector<PriceRow>& rows) {
  write_prices(ctx.out / "prices.csv", rows);
  for (const auto& r : rows) ctx.manifest["rows"].push_back(row_json(r));
  for (const auto& r : rows) {
    std::printf("%-24s n_steps=%-4d L=%-8zu estimate=%.6f se=%.2e reference=%.6f covered=%d %.2fs\n",
                r.method.c_str(), r.n_steps, r.L, r.mc.estimate, r.mc.std_error, r.reference,
                r.mc.covers(r.reference) ? 1 : 0, r.seconds);
  }
}

void cmd_price(Context& ctx) {
  const double ref = reference_price(ctx);
  finish_prices(ctx, {exact_row(ctx, ref)});
}

void cmd_compare(Context& ctx) {
  const double ref = reference_price(ctx);
  std::vector<PriceRow> rows = {exact_row(ctx, ref)};
  for (int n : ctx.cfg.euler_steps) rows.push_back(euler_row(ctx, n, ref));
  finish_prices(ctx, rows);
}

void cmd_heston_compare(Context& ctx) {
  if (!ctx.cfg.is_heston()) config_error("heston-compare needs a 'heston' block");
  if (!ctx.cfg.bk_h || !ctx.cfg.bk_N) config_error("heston-compare needs broadie_kaya.h and broadie_kaya.N");
  const HestonParams& hp = std::get<HestonParams>(ctx.cfg.model);
  const double ref = reference_price(ctx);
  std::vector<PriceRow> rows = {exact_row(ctx, ref)};
  const auto t0 = Clock::now();
  const auto y = simulate_bk(hp, *ctx.cfg.bk_h, *ctx.cfg.bk_N, ctx.cfg.paths, ctx.seed, ctx.workers);
  PriceRow bk{"broadie_kaya", 0, ctx.cfg.paths, mc_call_price(y, hp.r, hp.T, ctx.cfg.strike), ref, since(t0)};
  bk.mc.seconds = bk.seconds;
  rows.push_back(bk);
  ctx.manifest["broadie_kaya"] = {{"h", *ctx.cfg.bk_h}, {"N", *ctx.cfg.bk_N}, {"seconds", bk.seconds}};
  for (int n : ctx.cfg.euler_steps) rows.push_back(euler_row(ctx, n, ref));
  finish_prices(ctx, rows);
}

void cmd_simulate(Context& ctx) {
  const auto sim = run_exact(ctx);
  write_samples(ctx.out / "samples.csv", sim.d, sim.y_T, sim.x_T);
  std::printf("wrote %zu exact samples (h=%.4f, N=%d, clamp fraction %.2e)\n", sim.size(), sim.grid.h, sim.grid.N,
              sim.clamp_fraction);
}

void cmd_density(Context& ctx) {
  const auto sim = run_exact(ctx);
  write_samples(ctx.out / "samples_exact.csv", sim.d, sim.y_T, sim.x_T);
  std::vector<int> steps = ctx.cfg.euler_steps;
  if (steps.empty()) steps = {25};
  const ModelParams p = ctx.cfg.wmsv();
  for (int n : steps) {
    const auto t0 = Clock::now();
    const auto res = simulate_euler(p, EulerConfig{n}, ctx.cfg.paths, ctx.seed, ctx.workers);
    ctx.manifest["euler"][std::to_string(n)] = {{"truncation_fraction", res.truncation_fraction},
                                                {"seconds", since(t0)}};
    write_samples(ctx.out / ("samples_euler_" + std::to_string(n) + ".csv"), res.d, res.y_T, res.x_T);
  }
  std::printf("wrote exact and Euler samples for %zu paths to %s\n", ctx.cfg.paths, ctx.out.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  std::locale::global(std::locale::classic());

  CLI::App app{"Exact simulation of Wishart multidimensional stochastic volatility models"};
  app.require_subcommand(1);
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long long> paths;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  const std::pair<const char*, const char*> commands[] = {
      {"price", "reference price and exact Monte Carlo estimate"},
      {"simulate", "exact joint samples of (X_T, Y_T)"},
      {"density", "raw Y_T samples from the exact and Euler schemes"},
      {"compare", "exact method against Euler step counts"},
      {"heston-compare", "exact Heston method against Broadie-Kaya"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "configuration file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (falls back to the config, then WMSV_SEED)");
    sub->add_option("--paths", paths, "number of paths L");
    sub->add_option("--workers", workers, "worker threads (default: available cores)");
    sub->add_option("--out", out_dir, "output directory");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  Context ctx;
  ctx.command = command;
  try {
    ctx.cfg = load_config(config);
    if (paths) {
      if (*paths < 1) config_error("--paths must be at least 1");
      ctx.cfg.paths = static_cast<std::size_t>(*paths);
    }
    if (seed) {
      ctx.seed = *seed;
      ctx.seed_source = "flag";
    } else if (ctx.cfg.seed) {
      ctx.seed = *ctx.cfg.seed;
      ctx.seed_source = "config";
    } else if (const char* env = std::getenv("WMSV_SEED")) {
      try {
        std::size_t used = 0;
        ctx.seed = std::stoull(env, &used, 0);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        config_error(std::string("WMSV_SEED is not an unsigned integer: ") + env);
      }
      ctx.seed_source = "WMSV_SEED";
    } else {
      ctx.seed = kDefaultSeed;
      ctx.seed_source = "default";
    }
    const bool prices = command != "simulate" && command != "density";
    if (prices && ctx.cfg.paths < 2) config_error("pricing needs at least 2 paths");
    ctx.workers = workers ? *workers : ctx.cfg.workers.value_or(default_workers());
    if (ctx.workers < 1) config_error("workers must be at least 1");
    ctx.out = out_dir ? fs::path(*out_dir) : fs::path(ctx.cfg.output);
    fs::create_directories(ctx.out);

    ctx.manifest = {{"command", command},
                    {"config_file", config},
                    {"config", ctx.cfg.echo},
                    {"seed", ctx.seed},
                    {"seed_source", ctx.seed_source},
                    {"workers", ctx.workers},
                    {"paths", ctx.cfg.paths},
                    {"strike", ctx.cfg.strike},
                    {"simulation", {{"eps", ctx.cfg.sim.eps}, {"c1", ctx.cfg.sim.c1}, {"c2", ctx.cfg.sim.c2},
                                    {"lambda_fd", ctx.cfg.sim.lambda_fd}}}};
    const auto t0 = Clock::now();
    if (command == "price") cmd_price(ctx);
    else if (command == "simulate") cmd_simulate(ctx);
    else if (command == "density") cmd_density(ctx);
    else if (command == "compare") cmd_compare(ctx);
    else cmd_heston_compare(ctx);
    ctx.manifest["seconds_total"] = since(t0);
    std::ofstream(ctx.out / "manifest.json") << ctx.manifest.dump(2) << '\n';
  } catch (const Error& e) {
    std::fprintf(stderr, "wmsv %s: %s\n", command.c_str(), e.what());
    return e.code() == Errc::ConfigInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "wmsv %s: %s\n", command.c_str(), e.what());
    return 1;
  }
  return 0;
}
