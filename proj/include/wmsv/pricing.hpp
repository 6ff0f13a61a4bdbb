#pragma once

#include "wmsv/heston.hpp"
#include "wmsv/riccati.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <span>

namespace wmsv {

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_paths = 0;
  double seconds = 0.0;
  double clamp_fraction = 0.0;

  bool covers(double reference, double n_se = 3.0) const {
    return std::abs(estimate - reference) <= n_se * std_error;
  }
};

/// Discounted call payoff mean over Y_T samples, with std error sample_std / sqrt(n).
inline McResult mc_call_price(std::span<const double> y_T, double r, double T, double K) {
  WMSV_REQUIRE(y_T.size() >= 2, Errc::DomainError, "need at least 2 samples");
  const double disc = std::exp(-r * T);
  // Welford keeps the variance accurate when the payoff is nearly constant.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (double y : y_T) {
    const double payoff = disc * std::max(std::exp(y) - K, 0.0);
    ++n;
    const double delta = payoff - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (payoff - mean);
  }
  McResult out;
  out.estimate = mean;
  out.n_paths = n;
  out.std_error = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  out.ci_low = mean - 1.96 * out.std_error;
  out.ci_high = mean + 1.96 * out.std_error;
  return out;
}

/// u -> E[exp(-u Y_T)].
using LaplaceFn = std::function<cd(cd)>;

struct PricingOptions {
  double alpha = 1.5;
  double ode_tol = 1e-12;
  double quad_tol = 1e-12;
  double tail_tol = 1e-10;
  double max_frequency = 2e4;
};

namespace detail {

// Integrates f over [0, inf) on Gauss-Kronrod panels of growing width,
// stopping once a whole panel and the integrand at its right end are below tail_tol.
template <class F>
double integrate_half_line(F&& f, double first_width, const PricingOptions& opt) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0, a = 0.0, w = first_width;
  while (a < opt.max_frequency) {
    const double b = a + w;
    double err = 0.0;
    const double panel = GK::integrate(f, a, b, 15, opt.quad_tol, &err);
    total += panel;
    a = b;
    if (std::abs(panel) < opt.tail_tol && std::abs(f(b)) < opt.tail_tol) return total;
    w *= 1.5;
  }
  return total;
}

inline void check_damping(const LaplaceFn& laplace, double alpha) {
  WMSV_REQUIRE(alpha != 0.0 && alpha != -1.0, Errc::DampingInvalid, "alpha must avoid 0 and -1");
  cd m;
  try {
    m = laplace(cd(-(alpha + 1.0), 0.0));
  } catch (const Error& e) {
    if (e.code() == Errc::TransformNonexistent || e.code() == Errc::StepSizeUnderflow)
      throw Error(Errc::DampingInvalid, "E[S_T^(alpha+1)] does not exist");
    throw;
  }
  WMSV_REQUIRE(std::isfinite(m.real()) && m.real() > 0.0, Errc::DampingInvalid,
               "E[S_T^(alpha+1)] does not exist");
}

}  // namespace detail

/// Damped Fourier price e^{-rT} E[(e^{Y_T} - K)^+] from the Laplace transform.
/// With CF phi(v) = E[e^{ivY}] = laplace(-iv), the damped kernel needs
/// phi(v - (alpha + 1)i) = laplace(u) at u = -(alpha + 1 + iv).
/// alpha < -1 returns the put instead.
inline double carr_madan_price(const LaplaceFn& laplace, double r, double T, double K,
                               const PricingOptions& opt = {}) {
  WMSV_REQUIRE(K > 0.0, Errc::DomainError, "need K > 0");
  const double a = opt.alpha;
  detail::check_damping(laplace, a);
  const double k = std::log(K);
  const auto integrand = [&](double v) {
    const cd u(-(a + 1.0), -v);
    const cd denom(a * a + a - v * v, (2.0 * a + 1.0) * v);
    return (std::exp(cd(0.0, -v * k)) * laplace(u) / denom).real();
  };
  const double integral = detail::integrate_half_line(integrand, 20.0, opt);
  return std::exp(-r * T - a * k) / std::numbers::pi * integral;
}

/// Two-sided Gil-Pelaez price: e^{-rT}(E[e^Y; Y > k] - K P(Y > k)).
inline double levy_call_price(const LaplaceFn& laplace, double r, double T, double K,
                              const PricingOptions& opt = {}) {
  WMSV_REQUIRE(K > 0.0, Errc::DomainError, "need K > 0");
  const double k = std::log(K);
  const double forward = laplace(cd(-1.0, 0.0)).real();
  // P(Y > k) = 1/2 + (1/pi) int_0^inf Re[e^{-ivk} phi(v) / (iv)] dv;
  // the share measure has CF phi(v - i) / phi(-i).
  const auto integrand = [&](double v) {
    const cd rot = std::exp(cd(0.0, -v * k)) / cd(0.0, v);
    const cd p_itm = laplace(cd(0.0, -v));
    const cd s_itm = laplace(cd(-1.0, -v)) / forward;
    return (rot * (forward * s_itm - K * p_itm)).real();
  };
  const double integral = detail::integrate_half_line(integrand, 20.0, opt);
  return std::exp(-r * T) * (0.5 * (forward - K) + integral / std::numbers::pi);
}

inline LaplaceFn laplace_fn(const ModelParams& p, double tol) {
  return [p, tol](cd u) { return laplace_yT(u, p, tol); };
}

inline double call_price_reference(const ModelParams& p, double K, const PricingOptions& opt = {}) {
  p.validate();
  return carr_madan_price(laplace_fn(p, opt.ode_tol), p.r, p.T, K, opt);
}

inline double put_price_reference(const ModelParams& p, double K, PricingOptions opt = {}) {
  if (opt.alpha > -1.0) opt.alpha = -opt.alpha - 1.0;
  return call_price_reference(p, K, opt);
}

inline double levy_price_reference(const ModelParams& p, double K, const PricingOptions& opt = {}) {
  p.validate();
  return levy_call_price(laplace_fn(p, opt.ode_tol), p.r, p.T, K, opt);
}

inline double call_price_reference(const HestonParams& hp, double K, const PricingOptions& opt = {}) {
  return call_price_reference(to_wmsv(hp), K, opt);
}

}  // namespace wmsv
