#pragma once

#include "wmsv/condsim.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace wmsv {

/// dX = kappa(theta - X)dt + sigma sqrt(X) dW, dY = (r - X/2)dt + sqrt(X)(rho dW + sqrt(1 - rho^2) dZ).
struct HestonParams {
  double kappa = 1.0;
  double theta = 0.04;
  double sigma = 0.5;
  double rho = 0.0;
  double r = 0.0;
  double x = 0.04;
  double y = 0.0;
  double T = 1.0;

  double delta() const { return 4.0 * kappa * theta / (sigma * sigma); }

  void validate() const {
    WMSV_REQUIRE(kappa > 0.0 && theta > 0.0 && sigma > 0.0 && T > 0.0, Errc::InvalidParams,
                 "kappa, theta, sigma and T must be positive");
    WMSV_REQUIRE(std::abs(rho) < 1.0, Errc::InvalidParams, "need |rho| < 1");
    WMSV_REQUIRE(x >= 0.0 && std::isfinite(x), Errc::InvalidParams, "need x >= 0");
  }
};

/// One-factor WMSV with Sigma = sigma/2, H = -kappa/2, delta = 4 kappa theta / sigma^2, R = rho.
inline ModelParams to_wmsv(const HestonParams& hp) {
  hp.validate();
  ModelParams p;
  p.d = 1;
  p.delta = hp.delta();
  p.r = hp.r;
  p.x = Mat::Constant(1, 1, hp.x);
  p.y = hp.y;
  p.H = Mat::Constant(1, 1, -0.5 * hp.kappa);
  p.Sigma = Mat::Constant(1, 1, 0.5 * hp.sigma);
  p.R = Mat::Constant(1, 1, hp.rho);
  p.T = hp.T;
  return p;
}

inline HestonParams from_wmsv(const ModelParams& p) {
  WMSV_REQUIRE(p.d == 1, Errc::InvalidParams, "Heston needs d = 1");
  HestonParams hp;
  hp.kappa = -2.0 * p.H(0, 0);
  hp.sigma = 2.0 * p.Sigma(0, 0);
  hp.theta = p.delta * p.Sigma(0, 0) * p.Sigma(0, 0) / hp.kappa;
  hp.rho = p.R(0, 0);
  hp.r = p.r;
  hp.x = p.x(0, 0);
  hp.y = p.y;
  hp.T = p.T;
  return hp;
}

/// Exact CIR terminal draw: c chi'^2_delta(lambda), c = sigma^2 (1 - e^{-kT}) / (4k),
/// lambda = e^{-kT} x / c.
inline double sample_cir_terminal(const HestonParams& hp, Rng& rng) {
  const double decay = std::exp(-hp.kappa * hp.T);
  const double c = hp.sigma * hp.sigma * (1.0 - decay) / (4.0 * hp.kappa);
  return c * sample_ncchisq(hp.delta(), decay * hp.x / c, rng);
}

namespace detail {

// log sinh(w) for Re w >= 0 without overflow.
inline cd log_sinh(cd w) { return w + std::log(0.5 * (1.0 - std::exp(-2.0 * w))); }

inline cd coth(cd w) {
  const cd e = std::exp(-2.0 * w);
  return (1.0 + e) / (1.0 - e);
}

inline cd principal_root(cd z) {
  cd r = std::sqrt(z);
  return r.real() < 0.0 ? -r : r;
}

// log of c(g) = 2 g / (sigma^2 sinh(g T / 2)), any branch of the imaginary part.
inline cd log_bridge_scale(cd g, double sigma, double T) {
  return std::log(2.0 / (sigma * sigma)) + std::log(g) - log_sinh(0.5 * T * g);
}

// Continuous argument of f(s), s in [0, 1], from the principal argument at s = 0.
template <class F>
double trace_arg(F&& f) {
  constexpr double max_jump = std::numbers::pi / 8.0;
  cd prev = f(0.0);
  double arg = std::arg(prev);
  double s = 0.0, ds = 1.0 / 32.0;
  while (s < 1.0) {
    const double s1 = std::min(1.0, s + ds);
    const cd z = f(s1);
    const double jump = std::arg(z * std::conj(prev));
    if (std::abs(jump) > max_jump && ds > 1e-10) {
      ds *= 0.5;
      continue;
    }
    arg += jump;
    prev = z;
    s = s1;
    if (std::abs(jump) < 0.25 * max_jump) ds *= 2.0;
  }
  return arg;
}

// log S(z) with I_nu(z) = (z/2)^nu S(z); S is entire and even.
inline cd log_bessel_entire(double nu, cd z) {
  return std::log(bessel_i_entire_scaled(nu, z)) + std::abs(z.real());
}

// Bessel-bridge factor shared by the conditional transforms: for a root g,
//   g sinh(kT/2) / (k sinh(gT/2)) exp{-(g coth(gT/2) - k coth(kT/2)) (x + x_T) / sigma^2}
//   * I_nu(a c(g)) / I_nu(a c(k)),  a = sqrt(x x_T),
// with the power (c(g)/c(k))^nu continued along the path that defines g.
struct BridgeConstants {
  cd log_pre;    // log of the first factor
  cd coth_diff;  // g coth(gT/2) - k coth(kT/2)
  cd log_c;      // log c(g) with continuous imaginary part
};

template <class RootAt>
BridgeConstants bridge_constants(const HestonParams& hp, RootAt&& root_at) {
  const double k = hp.kappa, T = hp.T;
  const cd g = root_at(1.0);
  BridgeConstants b;
  b.log_pre = std::log(g) - std::log(k) + log_sinh(cd(0.5 * k * T)) - log_sinh(0.5 * T * g);
  b.coth_diff = g * coth(0.5 * T * g) - k * coth(cd(0.5 * k * T));
  const cd lc = log_bridge_scale(g, hp.sigma, T);
  const double arg = trace_arg([&](double s) {
    return std::polar(1.0, log_bridge_scale(root_at(s), hp.sigma, T).imag());
  });
  b.log_c = cd(lc.real(), arg);
  return b;
}

inline cd bessel_ratio_log(const HestonParams& hp, const BridgeConstants& b, double x, double xT) {
  const double nu = 0.5 * hp.delta() - 1.0;
  const double k = hp.kappa, T = hp.T;
  const double log_c0 = std::log(2.0 * k / (hp.sigma * hp.sigma)) - log_sinh(cd(0.5 * k * T)).real();
  cd out = nu * (b.log_c - log_c0);
  const double a = std::sqrt(x * xT);
  if (a > 0.0) {
    out += log_bessel_entire(nu, a * std::exp(b.log_c)) -
           log_bessel_entire(nu, cd(a * std::exp(log_c0))).real();
  }
  return out;
}

}  // namespace detail

/// E[exp(-u Y_T) | X_T = x_T] in closed form, eta(u) = sqrt((k + u sigma rho)^2 - sigma^2 u(u+1)).
inline cd cond_laplace_closed(cd u, const HestonParams& hp, double x, double xT) {
  hp.validate();
  WMSV_REQUIRE(x >= 0.0 && xT >= 0.0, Errc::DomainError, "need x, x_T >= 0");
  const double k = hp.kappa, sg = hp.sigma, rho = hp.rho;
  auto eta_at = [&](double s) {
    const cd us = s * u;
    const cd a = k + us * sg * rho;
    return detail::principal_root(a * a - sg * sg * us * (us + 1.0));
  };
  const auto b = detail::bridge_constants(hp, eta_at);
  const cd log_cf = b.log_pre - u * (hp.y + (hp.r - k * hp.theta * rho / sg) * hp.T) -
                    (b.coth_diff * (x + xT) + u * sg * rho * (xT - x)) / (sg * sg) +
                    detail::bessel_ratio_log(hp, b, x, xT);
  return std::exp(log_cf);
}

/// Conditional CF of the integrated variance int_0^T X dt given X_T = x_T,
/// gamma(lambda) = sqrt(k^2 - 2 sigma^2 i lambda).
inline cd bk_integrated_var_cf(double lambda, const HestonParams& hp, double x, double xT) {
  hp.validate();
  WMSV_REQUIRE(x >= 0.0 && xT >= 0.0, Errc::DomainError, "need x, x_T >= 0");
  const double k = hp.kappa, s2 = hp.sigma * hp.sigma;
  auto gamma_at = [&](double s) { return detail::principal_root(cd(k * k, -2.0 * s2 * s * lambda)); };
  const auto b = detail::bridge_constants(hp, gamma_at);
  return std::exp(b.log_pre - b.coth_diff * (x + xT) / s2 + detail::bessel_ratio_log(hp, b, x, xT));
}

/// Closed-form conditional CF model for the generic simulation pipeline.
class HestonCondCf {
 public:
  struct Entry {
    double lambda = 0.0;
    detail::BridgeConstants bridge;
    cd log_fixed = 0.0;  // x_T-independent part
    cd slope = 0.0;      // coefficient of x_T
  };
  struct Table {
    std::vector<Entry> entries;
    std::size_t size() const { return entries.size(); }
  };

  explicit HestonCondCf(const HestonParams& hp) : hp_(hp) { hp_.validate(); }

  const HestonParams& params() const { return hp_; }
  int dim() const { return 1; }
  double center() const { return hp_.y + hp_.r * hp_.T; }
  Mat correlation() const { return Mat::Constant(1, 1, hp_.rho); }

  Mat sample_terminal(Rng& rng) const { return Mat::Constant(1, 1, sample_cir_terminal(hp_, rng)); }

  Table make_table(std::span<const double> lambdas) const {
    const double k = hp_.kappa, sg = hp_.sigma, rho = hp_.rho;
    Table t;
    for (double lambda : lambdas) {
      const cd u(0.0, -lambda);
      auto eta_at = [&](double s) {
        const cd us = s * u;
        const cd a = k + us * sg * rho;
        return detail::principal_root(a * a - sg * sg * us * (us + 1.0));
      };
      Entry e;
      e.lambda = lambda;
      e.bridge = detail::bridge_constants(hp_, eta_at);
      e.log_fixed = e.bridge.log_pre - u * (hp_.y + (hp_.r - k * hp_.theta * rho / sg) * hp_.T) -
                    (e.bridge.coth_diff - u * sg * rho) * hp_.x / (sg * sg);
      e.slope = -(e.bridge.coth_diff + u * sg * rho) / (sg * sg);
      t.entries.push_back(e);
    }
    return t;
  }

  void eval(const Table& t, const Mat& xT, std::span<cd> out) const {
    const double v = xT(0, 0);
    for (std::size_t k = 0; k < t.entries.size(); ++k) {
      const Entry& e = t.entries[k];
      out[k] = std::exp(e.log_fixed + e.slope * v + detail::bessel_ratio_log(hp_, e.bridge, hp_.x, v));
    }
  }

 private:
  HestonParams hp_;
};

// ---------------------------------------------------------------------------
// Broadie-Kaya reference scheme

/// Step 4: Y_T = y + (rho/sigma)(X_T - x) + (r - k theta rho / sigma) T
///             + (rho k / sigma - 1/2) I + sqrt((1 - rho^2) I) Z.
inline double bk_log_price(const HestonParams& hp, double xT, double I, double Z) {
  const double k = hp.kappa, sg = hp.sigma, rho = hp.rho;
  return hp.y + rho / sg * (xT - hp.x) + (hp.r - k * hp.theta * rho / sg) * hp.T +
         (rho * k / sg - 0.5) * I + std::sqrt((1.0 - rho * rho) * std::max(I, 0.0)) * Z;
}

/// Broadie-Kaya sampler with user-chosen (h, N): F(v) = hv/pi + (2/pi) sum sin(hnv)/n Re phi(hn)
/// inverted on [0, pi/h].
class BkSampler {
 public:
  BkSampler(const HestonParams& hp, double h, int N) : hp_(hp), h_(h), N_(N) {
    hp_.validate();
    WMSV_REQUIRE(h > 0.0 && N >= 1, Errc::DomainError, "need h > 0 and N >= 1");
    const double k = hp.kappa, s2 = hp.sigma * hp.sigma;
    for (int n = 1; n <= N; ++n) {
      const double lambda = n * h;
      auto gamma_at = [&](double s) { return detail::principal_root(cd(k * k, -2.0 * s2 * s * lambda)); };
      bridges_.push_back(detail::bridge_constants(hp_, gamma_at));
    }
  }

  double h() const { return h_; }
  int N() const { return N_; }

  /// Re phi(hn | x, x_T) for n = 1..N.
  void cf_real(double xT, std::span<double> out) const {
    const double s2 = hp_.sigma * hp_.sigma;
    for (int n = 0; n < N_; ++n) {
      const auto& b = bridges_[n];
      out[n] = std::exp(b.log_pre - b.coth_diff * (hp_.x + xT) / s2 +
                        detail::bessel_ratio_log(hp_, b, hp_.x, xT))
                   .real();
    }
  }

  /// Inverse of F on [0, pi/h] by safeguarded Newton then bisection.
  double invert(std::span<const double> re_phi, double U, const InversionOptions& opt = {}) const {
    double a = 0.0, b = std::numbers::pi / h_;
    auto eval = [&](double v, double& F, double& dF) {
      const cd step = std::polar(1.0, h_ * v);
      cd rot = step;
      double s = 0.0, ds = 0.0;
      for (int n = 1; n <= N_; ++n) {
        s += rot.imag() / n * re_phi[n - 1];
        ds += rot.real() * re_phi[n - 1];
        rot *= step;
      }
      F = h_ * v / std::numbers::pi + 2.0 / std::numbers::pi * s;
      dF = h_ / std::numbers::pi + 2.0 * h_ / std::numbers::pi * ds;
    };
    double v = 0.5 * (a + b);
    for (int it = 0; it < opt.newton_iters; ++it) {
      double F, dF;
      eval(v, F, dF);
      const double f = F - U;
      if (std::abs(f) <= opt.tol) return v;
      if (f < 0.0) a = v; else b = v;
      double next = dF > 0.0 ? v - f / dF : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      v = next;
    }
    for (int it = 0; it < opt.bisect_iters; ++it) {
      double F, dF;
      eval(v, F, dF);
      const double f = F - U;
      if (std::abs(f) <= opt.tol) break;
      if (f < 0.0) a = v; else b = v;
      v = 0.5 * (a + b);
      if (b - a <= 1e-16) break;
    }
    return v;
  }

  std::pair<double, double> operator()(Rng& rng) const {
    const double xT = sample_cir_terminal(hp_, rng);
    thread_local std::vector<double> re;
    re.resize(N_);
    cf_real(xT, re);
    const double I = invert(re, rng.uniform());
    return {xT, bk_log_price(hp_, xT, I, rng.normal())};
  }

 private:
  HestonParams hp_;
  double h_;
  int N_;
  std::vector<detail::BridgeConstants> bridges_;
};

inline std::pair<double, double> bk_sample(const HestonParams& hp, double h, int N, Rng& rng) {
  return BkSampler(hp, h, N)(rng);
}

/// L Broadie-Kaya draws; path l uses stream (seed, l, kTagHeston).
inline std::vector<double> simulate_bk(const HestonParams& hp, double h, int N, std::size_t L,
                                       std::uint64_t seed, int workers = 1) {
  const BkSampler sampler(hp, h, N);
  std::vector<double> y(L);
  parallel_for(L, workers, [&](std::size_t l) {
    Rng rng(seed, l, kTagHeston);
    y[l] = sampler(rng).second;
  });
  return y;
}

}  // namespace wmsv
