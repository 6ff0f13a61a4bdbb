#pragma once

#include "wmsv/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wmsv {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double min_step_ratio = 1e-14;  // underflow threshold relative to the span
  int max_steps = 200000;
};

struct OdeStats {
  int accepted = 0;
  int rejected = 0;
};

/// Adaptive Dormand-Prince 5(4) from t0 to t1 for dy/dt = f(t, y).
/// `State` is an Eigen vector; `on_accept(t, y)` runs after every accepted
/// step and may project y (for example, symmetrize matrix blocks).
template <class State, class Rhs, class OnAccept>
State integrate_dp45(Rhs&& f, State y, double t0, double t1, const OdeOptions& opt,
                     OnAccept&& on_accept, OdeStats* stats = nullptr) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = t1 - t0;
  WMSV_REQUIRE(span > 0.0, Errc::DomainError, "integration span must be positive");
  const double h_min = opt.min_step_ratio * span;
  double t = t0;
  double h = 1e-3 * span;
  State k1 = f(t, y);
  State k2, k3, k4, k5, k6, k7, y_new, err;
  int steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) {
      throw Error(Errc::StepSizeUnderflow, "step budget exhausted at t = " + std::to_string(t));
    }
    h = std::min(h, t1 - t);
    k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
    k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
    k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    k7 = f(t + h, y_new);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double norm = 0.0;
    bool finite = true;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      const double ratio = std::abs(err[i]) / scale;
      if (!std::isfinite(ratio)) finite = false;
      norm = std::max(norm, ratio);
    }
    if (finite && norm <= 1.0) {
      t = (t1 - (t + h) <= 1e-15 * span) ? t1 : t + h;
      y = y_new;
      on_accept(t, y);
      k1 = (t == t1) ? k7 : f(t, y);
      if (stats) ++stats->accepted;
      const double grow = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
      h *= grow;
    } else {
      if (stats) ++stats->rejected;
      h *= finite ? std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 1.0) : 0.2;
      if (h < h_min) {
        throw Error(Errc::StepSizeUnderflow,
                    "step size " + std::to_string(h) + " below threshold at t = " + std::to_string(t));
      }
    }
  }
  return y;
}

}  // namespace wmsv
