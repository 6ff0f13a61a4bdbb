#pragma once

#include "wmsv/parallel.hpp"
#include "wmsv/riccati.hpp"
#include "wmsv/rng.hpp"
#include "wmsv/specfun.hpp"
#include "wmsv/wishart.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace wmsv {

// ---------------------------------------------------------------------------
// Inversion grid

struct InversionGrid {
  double l_eps = 0.0;
  double h = 1.0;
  int N = 1;
  double eps = 1e-3;
  double c1 = 0.1;
  double c2 = 0.5;

  double width() const { return 2.0 * std::numbers::pi / h; }
  double upper() const { return l_eps + width(); }
};

inline double std_normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Grid shared by all paths, chosen from per-path conditional moments:
///   l_eps = min (mu + sigma q),  q = Phi^{-1}(eps / 4)
///   h     = pi / (|q| max (c1 |mu| + sigma))
///   N     = max ceil((1 + c2 sqrt(tr R'R)) / (h sigma) sqrt(-2 log(pi eps / 4)))
/// h is further capped so the window [l_eps, l_eps + 2 pi / h] reaches
/// max (mu + sigma |q|).
inline InversionGrid choose_grid(std::span<const double> mu, std::span<const double> sigma,
                                 double eps, double c1, double c2, const Mat& R) {
  WMSV_REQUIRE(!mu.empty() && mu.size() == sigma.size(), Errc::DomainError, "need matching rows");
  WMSV_REQUIRE(eps > 0.0 && eps < 0.1, Errc::DomainError, "eps must lie in (0, 0.1)");
  WMSV_REQUIRE(c1 >= 0.0 && c2 >= 0.0, Errc::DomainError, "c1, c2 must be nonnegative");
  const double q = std_normal_quantile(0.25 * eps);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double spread = 0.0;
  double sigma_min = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < mu.size(); ++l) {
    WMSV_REQUIRE(sigma[l] > 0.0, Errc::NonPositiveVariance, "sigma must be positive");
    lo = std::min(lo, mu[l] + sigma[l] * q);
    hi = std::max(hi, mu[l] - sigma[l] * q);
    spread = std::max(spread, c1 * std::abs(mu[l]) + sigma[l]);
    sigma_min = std::min(sigma_min, sigma[l]);
  }
  InversionGrid g;
  g.eps = eps;
  g.c1 = c1;
  g.c2 = c2;
  g.l_eps = lo;
  g.h = std::numbers::pi / (std::abs(q) * spread);
  g.h = std::min(g.h, 2.0 * std::numbers::pi / (hi - lo));
  const double tail = std::sqrt(-2.0 * std::log(std::numbers::pi * eps / 4.0));
  const double boost = 1.0 + c2 * std::sqrt((R.transpose() * R).trace());
  g.N = std::max(1, static_cast<int>(std::ceil(boost / (g.h * sigma_min) * tail)));
  return g;
}

// ---------------------------------------------------------------------------
// Trigonometric CDF approximation and its inversion

struct InversionOutcome {
  double v = 0.0;
  bool clamped = false;
  bool bisected = false;
  int iterations = 0;
};

struct InversionOptions {
  int newton_iters = 5;
  int bisect_iters = 80;
  double tol = 1e-9;
};

/// F_{h,N}(v) = h(v - l)/(2 pi) + (1/pi) sum_n [Re phi_n (sin nhv - sin nhl) - Im phi_n (cos nhv - cos nhl)] / n
/// for phi_n = phi(n h), n = 1..N.
class CdfSeries {
 public:
  explicit CdfSeries(const InversionGrid& g) : g_(g), sin_l_(g.N), cos_l_(g.N) {
    for (int n = 1; n <= g.N; ++n) {
      sin_l_[n - 1] = std::sin(n * g.h * g.l_eps);
      cos_l_[n - 1] = std::cos(n * g.h * g.l_eps);
    }
  }

  const InversionGrid& grid() const { return g_; }

  /// Row constant: the l-dependent part of the series.
  double offset(std::span<const cd> phi) const {
    double k = 0.0;
    for (int n = 1; n <= g_.N; ++n) {
      k += (-phi[n - 1].real() * sin_l_[n - 1] + phi[n - 1].imag() * cos_l_[n - 1]) / n;
    }
    return k;
  }

  /// F and dF/dv at v given the row offset.
  void eval(std::span<const cd> phi, double offset, double v, double& F, double& dF) const {
    const double h = g_.h;
    const cd step = std::polar(1.0, h * v);
    cd rot = step;
    double s = 0.0, ds = 0.0;
    for (int n = 1; n <= g_.N; ++n) {
      const double re = phi[n - 1].real(), im = phi[n - 1].imag();
      s += (re * rot.imag() - im * rot.real()) / n;
      ds += re * rot.real() + im * rot.imag();
      rot *= step;
      if ((n & 31) == 0) rot = std::polar(1.0, (n + 1) * h * v);
    }
    F = h * (v - g_.l_eps) / (2.0 * std::numbers::pi) + (s + offset) / std::numbers::pi;
    dF = h / (2.0 * std::numbers::pi) + h * ds / std::numbers::pi;
  }

  double cdf(std::span<const cd> phi, double v) const {
    WMSV_REQUIRE(v >= g_.l_eps - 1e-12 && v <= g_.upper() + 1e-12, Errc::OutOfRange,
                 "v outside the inversion window");
    double F, dF;
    eval(phi, offset(phi), v, F, dF);
    return F;
  }

  double density(std::span<const cd> phi, double v) const {
    double F, dF;
    eval(phi, offset(phi), v, F, dF);
    return dF;
  }

  /// Solves F(v) = U: safeguarded Newton from v0, then bisection on the bracket.
  InversionOutcome invert(std::span<const cd> phi, double U, double v0,
                          const InversionOptions& opt = {}) const {
    WMSV_REQUIRE(U > 0.0 && U < 1.0, Errc::DomainError, "U must lie in (0, 1)");
    const double k = offset(phi);
    double a = g_.l_eps, b = g_.upper();
    double Fa, Fb, dummy;
    eval(phi, k, a, Fa, dummy);
    eval(phi, k, b, Fb, dummy);
    InversionOutcome out;
    if (Fa > U) {
      out.v = a;
      out.clamped = true;
      return out;
    }
    if (Fb < U) {
      out.v = b;
      out.clamped = true;
      return out;
    }
    double v = std::clamp(v0, a, b);
    for (int it = 0; it < opt.newton_iters; ++it) {
      double F, dF;
      eval(phi, k, v, F, dF);
      ++out.iterations;
      const double f = F - U;
      if (std::abs(f) <= opt.tol) {
        out.v = v;
        return out;
      }
      if (f < 0.0) a = v; else b = v;
      double next = (dF > 0.0) ? v - f / dF : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      v = next;
    }
    out.bisected = true;
    for (int it = 0; it < opt.bisect_iters; ++it) {
      double F, dF;
      eval(phi, k, v, F, dF);
      ++out.iterations;
      const double f = F - U;
      if (std::abs(f) <= opt.tol) break;
      if (f < 0.0) a = v; else b = v;
      v = 0.5 * (a + b);
      if (b - a <= 1e-15 * (1.0 + std::abs(v))) break;
    }
    out.v = v;
    return out;
  }

 private:
  InversionGrid g_;
  std::vector<double> sin_l_, cos_l_;
};

inline double cdf_approx(double v, std::span<const cd> phi, const InversionGrid& g) {
  return CdfSeries(g).cdf(phi, v);
}

inline InversionOutcome sample_y(double U, std::span<const cd> phi, const InversionGrid& g,
                                 double v0) {
  return CdfSeries(g).invert(phi, U, v0);
}

// ---------------------------------------------------------------------------
// Conditional characteristic function of Y_T given X_T for the WMSV model

struct CondCfOptions {
  double ode_tol = 1e-10;
  double hyp_eps = 1e-12;
};

/// phi(lambda; x_T) = c(lambda) exp(-tr[B x_T] / 2) 0F1(delta/2; G x_T) / 0F1(delta/2; G0 x_T),
/// with per-frequency constants taken from the Riccati solution at u = -i lambda.
class WmsvCondCf {
 public:
  struct Entry {
    double lambda = 0.0;
    cd log_c = 0.0;
    CMat B;
    CMat G;
  };
  struct Table {
    std::vector<Entry> entries;
    std::size_t size() const { return entries.size(); }
  };

  explicit WmsvCondCf(const ModelParams& p, CondCfOptions opt = {})
      : WmsvCondCf(p, solve_conditional(p, 0.0, opt.ode_tol), opt) {}

  WmsvCondCf(const ModelParams& p, const RiccatiSolution& sol0, CondCfOptions opt = {})
      : p_(p), opt_(opt), hyp_(0.5 * p.delta, p.d), sol0_(sol0) {
    p_.validate();
    law_ = terminal_law(p_, sol0_);
    sampler_ = std::make_shared<WishartSampler>(law_);
    const Mat V0 = sol0_.V.real();
    V0inv_ = V0.inverse();
    const Mat Psi0 = sol0_.Psi.real();
    base_ = Psi0 * V0inv_ * Psi0.transpose();
    G0_ = 0.25 * V0inv_ * Psi0.transpose() * p_.x * Psi0 * V0inv_;
  }

  const ModelParams& params() const { return p_; }
  int dim() const { return p_.d; }
  double center() const { return p_.y + p_.r * p_.T; }
  Mat correlation() const { return p_.R; }
  const RiccatiSolution& sol0() const { return sol0_; }
  const WishartLaw& law() const { return law_; }
  const Hyp0F1& hypergeometric() const { return hyp_; }

  Mat sample_terminal(Rng& rng) const { return (*sampler_)(rng); }

  Entry make_entry(const RiccatiSolution& s, double lambda) const {
    const int d = p_.d;
    Entry e;
    e.lambda = lambda;
    const Eigen::PartialPivLU<CMat> lu(s.V);
    WMSV_REQUIRE(std::abs(s.detV) > 0.0, Errc::SingularV, "V(0,u) is singular");
    const CMat Vinv = lu.solve(CMat::Identity(d, d));
    const CMat X = p_.x.cast<cd>();
    const CMat quad = 2.0 * s.psi + s.Psi * Vinv * s.Psi.transpose() - base_.cast<cd>();
    e.log_c = 0.5 * p_.delta * (sol0_.log_detV - s.log_detV) - s.phi - s.u * p_.y -
              0.5 * (quad * X).trace();
    e.B = Vinv - V0inv_.cast<cd>();
    e.G = 0.25 * Vinv * s.Psi.transpose() * X * s.Psi * Vinv;
    return e;
  }

  Table make_table(std::span<const double> lambdas) const {
    const auto sols = solve_on_frequencies(p_, lambdas, opt_.ode_tol);
    Table t;
    t.entries.reserve(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) t.entries.push_back(make_entry(sols[k], lambdas[k]));
    return t;
  }

  /// out[k] = phi(lambda_k; x_T) for every table entry.
  void eval(const Table& t, const Mat& xT, std::span<cd> out) const {
    const double f0 = hyp_eval(Mat(G0_ * xT).cast<cd>()).real();
    WMSV_REQUIRE(f0 > 0.0 && std::isfinite(f0), Errc::HypergeometricOverflow, "0F1 at u = 0 overflowed");
    const int d = p_.d;
    if (d == 2) {
      eval_pair(t, xT, f0, out);
      return;
    }
    CMat gx(d, d);
    for (std::size_t k = 0; k < t.entries.size(); ++k) {
      const Entry& e = t.entries[k];
      cd tr = 0.0;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          tr += e.B(i, j) * xT(j, i);
          cd acc = 0.0;
          for (int l = 0; l < d; ++l) acc += e.G(i, l) * xT(l, j);
          gx(i, j) = acc;
        }
      }
      const cd f = hyp_eval(gx);
      out[k] = std::exp(e.log_c - 0.5 * tr) * (f / f0);
    }
  }

  /// Ad hoc single evaluation (one ODE solve).
  cd cf(double lambda, const Mat& xT) const {
    const double l[1] = {lambda};
    const Table t = make_table(l);
    cd out;
    eval(t, xT, std::span<cd>(&out, 1));
    return out;
  }

 private:
  // Same as the general loop, unrolled for 2 x 2 states.
  void eval_pair(const Table& t, const Mat& xT, double f0, std::span<cd> out) const {
    const double x00 = xT(0, 0), x01 = xT(0, 1), x10 = xT(1, 0), x11 = xT(1, 1);
    cd alpha[2];
    for (std::size_t k = 0; k < t.entries.size(); ++k) {
      const Entry& e = t.entries[k];
      const cd tr = e.B(0, 0) * x00 + e.B(0, 1) * x10 + e.B(1, 0) * x01 + e.B(1, 1) * x11;
      eig2(e.G(0, 0) * x00 + e.G(0, 1) * x10, e.G(0, 0) * x01 + e.G(0, 1) * x11,
           e.G(1, 0) * x00 + e.G(1, 1) * x10, e.G(1, 0) * x01 + e.G(1, 1) * x11, alpha[0], alpha[1]);
      out[k] = std::exp(e.log_c - 0.5 * tr) * (hyp_eval(alpha) / f0);
    }
  }

  cd hyp_eval(const CMat& arg) const {
    const CVec alpha = eig_complex(arg);
    return hyp_eval(std::span<const cd>(alpha.data(), alpha.size()));
  }

  cd hyp_eval(std::span<const cd> alpha) const {
    try {
      return hyp_(alpha, opt_.hyp_eps).value;
    } catch (const Error& e) {
      if (e.code() == Errc::TruncationUnreachable || e.code() == Errc::WeightExceedsTable) {
        throw Error(Errc::HypergeometricOverflow, e.what());
      }
      throw;
    }
  }

  ModelParams p_;
  CondCfOptions opt_;
  Hyp0F1 hyp_;
  RiccatiSolution sol0_;
  WishartLaw law_;
  std::shared_ptr<WishartSampler> sampler_;
  Mat V0inv_, base_, G0_;
};

/// Conditional CF from explicit Riccati solutions at u = -i lambda and u = 0.
inline cd cond_cf(double lambda, const ModelParams& p, const RiccatiSolution& sol,
                  const RiccatiSolution& sol0, const Mat& xT) {
  const WmsvCondCf model(p, sol0);
  WmsvCondCf::Table t;
  t.entries.push_back(model.make_entry(sol, lambda));
  cd out;
  model.eval(t, xT, std::span<cd>(&out, 1));
  return out;
}

// ---------------------------------------------------------------------------
// Conditional moments by centered finite differences

struct Moments {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Frequencies used by cond_moments: {lambda_fd, lambda_fd / 2}.
inline std::vector<double> moment_frequencies(double lambda_fd) { return {lambda_fd, 0.5 * lambda_fd}; }

/// mu = Im phi'(0), sigma^2 = -Re phi''(0) - mu^2, from values of the centered
/// CF exp(-i lambda c) phi(lambda) at lambda and lambda / 2 with one Richardson step.
inline Moments moments_from_cf(cd phi_full, cd phi_half, double lambda, double center) {
  const double half = 0.5 * lambda;
  const cd a = phi_full * std::polar(1.0, -lambda * center);
  const cd b = phi_half * std::polar(1.0, -half * center);
  const double m1_full = a.imag() / lambda, m1_half = b.imag() / half;
  const double m2_full = 2.0 * (1.0 - a.real()) / (lambda * lambda);
  const double m2_half = 2.0 * (1.0 - b.real()) / (half * half);
  const double m1 = (4.0 * m1_half - m1_full) / 3.0;
  const double m2 = (4.0 * m2_half - m2_full) / 3.0;
  const double var = m2 - m1 * m1;
  WMSV_REQUIRE(var > 0.0 && std::isfinite(var), Errc::NonPositiveVariance,
               "finite-difference variance " + std::to_string(var) + " is not positive");
  return {center + m1, std::sqrt(var)};
}

template <class Model>
Moments cond_moments(const Model& model, const typename Model::Table& fd_table, const Mat& xT) {
  cd v[2];
  model.eval(fd_table, xT, std::span<cd>(v, 2));
  return moments_from_cf(v[0], v[1], fd_table.entries[0].lambda, model.center());
}

// ---------------------------------------------------------------------------
// Exact joint simulation of (X_T, Y_T)

struct CondSimOptions {
  double eps = 1e-3;
  double c1 = 0.1;
  double c2 = 0.5;
  double lambda_fd = 1e-2;
  InversionOptions inversion;
};

struct PhaseTimes {
  double terminal = 0.0;
  double moments = 0.0;
  double grid = 0.0;
  double table = 0.0;
  double inversion = 0.0;
  double total() const { return terminal + moments + grid + table + inversion; }
};

struct SimulationResult {
  int d = 1;
  std::vector<double> x_T;  // row-major d x d per path
  std::vector<double> y_T;
  InversionGrid grid;
  double clamp_fraction = 0.0;
  double truncation_flag_fraction = 0.0;  // paths with (2/pi)|phi(Nh)| > eps/2
  double bisection_fraction = 0.0;
  PhaseTimes times;

  std::size_t size() const { return y_T.size(); }
  Mat terminal(std::size_t l) const {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = x_T[l * d * d + i * d + j];
    return m;
  }
};

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
void with_path_context(std::size_t l, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (path " + std::to_string(l) + ")");
  }
}
}  // namespace detail

/// Algorithm: sample X_T, conditional moments, shared grid, CF table, inverse transform.
/// Path l draws X_T from stream (seed, l, 0) and U from stream (seed, l, 1).
template <class Model>
SimulationResult simulate(const Model& model, std::size_t L, std::uint64_t seed,
                          const CondSimOptions& opt = {}, int workers = 1) {
  WMSV_REQUIRE(L >= 1, Errc::DomainError, "need at least one path");
  using clock = std::chrono::steady_clock;
  const int d = model.dim();
  SimulationResult res;
  res.d = d;
  res.x_T.resize(L * d * d);
  res.y_T.resize(L);

  auto t0 = clock::now();
  parallel_for(L, workers, [&](std::size_t l) {
    detail::with_path_context(l, [&] {
      Rng rng(seed, l, kTagVolatility);
      const Mat xT = model.sample_terminal(rng);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) res.x_T[l * d * d + i * d + j] = xT(i, j);
    });
  });
  res.times.terminal = detail::seconds_since(t0);

  t0 = clock::now();
  const auto fd_lambdas = moment_frequencies(opt.lambda_fd);
  const auto fd_table = model.make_table(fd_lambdas);
  std::vector<double> mu(L), sigma(L);
  parallel_for(L, workers, [&](std::size_t l) {
    detail::with_path_context(l, [&] {
      const Moments m = cond_moments(model, fd_table, res.terminal(l));
      mu[l] = m.mu;
      sigma[l] = m.sigma;
    });
  });
  res.times.moments = detail::seconds_since(t0);

  t0 = clock::now();
  res.grid = choose_grid(mu, sigma, opt.eps, opt.c1, opt.c2, model.correlation());
  res.times.grid = detail::seconds_since(t0);

  t0 = clock::now();
  std::vector<double> lambdas(res.grid.N);
  for (int n = 1; n <= res.grid.N; ++n) lambdas[n - 1] = n * res.grid.h;
  const auto table = model.make_table(lambdas);
  res.times.table = detail::seconds_since(t0);

  t0 = clock::now();
  const CdfSeries series(res.grid);
  const int N = res.grid.N;
  std::vector<unsigned char> clamped(L, 0), flagged(L, 0), bisected(L, 0);
  parallel_for(L, workers, [&](std::size_t l) {
    detail::with_path_context(l, [&] {
      thread_local std::vector<cd> phi;
      phi.resize(N);
      model.eval(table, res.terminal(l), phi);
      Rng rng(seed, l, kTagLogPrice);
      const double U = rng.uniform();
      const double v0 = mu[l] + sigma[l] * std_normal_quantile(U);
      const InversionOutcome o = series.invert(phi, U, v0, opt.inversion);
      res.y_T[l] = o.v;
      clamped[l] = o.clamped;
      bisected[l] = o.bisected;
      flagged[l] = (2.0 / std::numbers::pi) * std::abs(phi[N - 1]) > 0.5 * opt.eps;
    });
  });
  res.times.inversion = detail::seconds_since(t0);

  auto frac = [&](const std::vector<unsigned char>& v) {
    return static_cast<double>(std::count(v.begin(), v.end(), 1)) / static_cast<double>(L);
  };
  res.clamp_fraction = frac(clamped);
  res.truncation_flag_fraction = frac(flagged);
  res.bisection_fraction = frac(bisected);
  return res;
}

}  // namespace wmsv
