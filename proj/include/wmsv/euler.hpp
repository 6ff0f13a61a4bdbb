#pragma once

#include "wmsv/model.hpp"
#include "wmsv/parallel.hpp"
#include "wmsv/rng.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace wmsv {

struct EulerConfig {
  int n_steps = 50;
};

/// One Euler step with positive-part projection:
///   X' = (X + (delta S'S + HX + XH') dt + sqrt(X) dW Sigma + Sigma' dW' sqrt(X))^+
///   Y' = Y + (r - tr X / 2) dt + tr[sqrt(X)(dW R' + dZ sqrt(I - RR'))]
/// dW and dZ already carry the sqrt(dt) scaling.
inline std::pair<Mat, double> euler_step(const Mat& X, double Y, const ModelParams& p, const Mat& dW,
                                         const Mat& dZ, double dt, bool* truncated = nullptr) {
  const Mat root = sqrt_psd(X);
  const Mat S = p.gram();
  const Mat noise = root * dW * p.Sigma;
  Mat next = X + (p.delta * S + p.H * X + X * p.H.transpose()) * dt + noise + noise.transpose();
  next = (0.5 * (next + next.transpose())).eval();
  const double y = Y + (p.r - 0.5 * X.trace()) * dt +
                   (root * (dW * p.R.transpose() + dZ * p.orthogonal_loading())).trace();
  return {positive_part(next, truncated), y};
}

namespace detail {

// Fixed-size kernel. The eigendecomposition of the projected state is reused
// for the square root in the following step.
template <int D>
class EulerKernel {
 public:
  using M = Eigen::Matrix<double, D, D>;

  EulerKernel(const ModelParams& p, int n_steps) : n_(n_steps) {
    dt_ = p.T / n_steps;
    sdt_ = std::sqrt(dt_);
    drift_ = p.delta * p.gram();
    H_ = p.H;
    Sigma_ = p.Sigma;
    Rt_ = p.R.transpose();
    Q_ = p.orthogonal_loading();
    x0_ = p.x;
    r_ = p.r;
    y0_ = p.y;
  }

  // Returns (X_T, Y_T); counts projection events in *truncations.
  std::pair<M, double> run(Rng& rng, long* truncations) const {
    M X = x0_;
    M root = sqrt_of(X);
    double Y = y0_;
    M dW, dZ;
    for (int step = 0; step < n_; ++step) {
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) dW(i, j) = sdt_ * rng.normal();
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) dZ(i, j) = sdt_ * rng.normal();
      const M noise = root * dW * Sigma_;
      M next = X + (drift_ + H_ * X + X * H_.transpose()) * dt_ + noise + noise.transpose();
      Y += (r_ - 0.5 * X.trace()) * dt_ + (root * (dW * Rt_ + dZ * Q_)).trace();
      next = (0.5 * (next + next.transpose())).eval();
      project(next, X, root, truncations);
    }
    return {X, Y};
  }

 private:
  static M sqrt_of(const M& a) { return M(sqrt_psd(Mat(a))); }

  // X = next^+, root = sqrt(X).
  static void project(const M& next, M& X, M& root, long* truncations) {
    if constexpr (D == 1) {
      const double v = next(0, 0);
      if (v < 0.0 && truncations) ++*truncations;
      X(0, 0) = std::max(v, 0.0);
      root(0, 0) = std::sqrt(X(0, 0));
    } else if constexpr (D == 2) {
      const double a = next(0, 0), c = next(1, 1), b = next(0, 1);
      const double mean = 0.5 * (a + c), half = 0.5 * (a - c);
      const double rad = std::sqrt(half * half + b * b);
      const double l1 = mean + rad, l2 = mean - rad;
      if (l2 >= 0.0) {
        X = next;
        // sqrt of a 2x2 SPD matrix: (A + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
        const double sdet = std::sqrt(std::max(l1 * l2, 0.0));
        const double denom = std::sqrt(l1 + l2 + 2.0 * sdet);
        if (denom > 0.0) {
          root = (X + sdet * M::Identity()) / denom;
        } else {
          root.setZero();
        }
        return;
      }
      if (truncations) ++*truncations;
      if (l1 <= 0.0) {
        X.setZero();
        root.setZero();
        return;
      }
      // Rank one: eigenvector of l1.
      double vx, vy;
      if (rad == 0.0) {
        vx = 1.0;
        vy = 0.0;
      } else if (half >= 0.0) {
        vx = half + rad;
        vy = b;
      } else {
        vx = b;
        vy = rad - half;
      }
      const double nrm = std::sqrt(vx * vx + vy * vy);
      vx /= nrm;
      vy /= nrm;
      M vv;
      vv << vx * vx, vx * vy, vx * vy, vy * vy;
      X = l1 * vv;
      root = std::sqrt(l1) * vv;
    } else {
      const SymEigen e = sym_eig(Mat(next));
      bool neg = false;
      Vec clipped = e.values, roots = e.values;
      for (int i = 0; i < D; ++i) {
        if (clipped(i) < 0.0) {
          neg = true;
          clipped(i) = 0.0;
        }
        roots(i) = std::sqrt(clipped(i));
      }
      if (neg && truncations) ++*truncations;
      X = M(e.vectors * clipped.asDiagonal() * e.vectors.transpose());
      X = (0.5 * (X + X.transpose())).eval();
      root = M(e.vectors * roots.asDiagonal() * e.vectors.transpose());
    }
  }

  int n_;
  double dt_, sdt_, r_, y0_;
  M drift_, H_, Sigma_, Rt_, Q_, x0_;
};

template <int D>
void run_euler(const ModelParams& p, int n_steps, std::size_t L, std::uint64_t seed, int workers,
               std::vector<double>& x_T, std::vector<double>& y_T, long& truncations) {
  const EulerKernel<D> kernel(p, n_steps);
  std::vector<long> counts(L, 0);
  parallel_for(L, workers, [&](std::size_t l) {
    Rng rng(seed, l, kTagEuler);
    long c = 0;
    const auto [X, Y] = kernel.run(rng, &c);
    counts[l] = c;
    y_T[l] = Y;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) x_T[l * D * D + i * D + j] = X(i, j);
  });
  truncations = 0;
  for (long c : counts) truncations += c;
}

}  // namespace detail

struct EulerResult {
  int d = 1;
  int n_steps = 1;
  std::vector<double> x_T;  // row-major d x d per path
  std::vector<double> y_T;
  double truncation_fraction = 0.0;  // projected steps / all steps

  std::size_t size() const { return y_T.size(); }
};

/// L discretized paths; path l uses stream (seed, l, kTagEuler), drawing dW
/// row-major then dZ row-major at every step.
inline EulerResult simulate_euler(const ModelParams& p, const EulerConfig& cfg, std::size_t L,
                                  std::uint64_t seed, int workers = 1) {
  p.validate();
  WMSV_REQUIRE(cfg.n_steps >= 1, Errc::DomainError, "need n_steps >= 1");
  EulerResult res;
  res.d = p.d;
  res.n_steps = cfg.n_steps;
  res.x_T.resize(L * p.d * p.d);
  res.y_T.resize(L);
  long truncations = 0;
  switch (p.d) {
    case 1: detail::run_euler<1>(p, cfg.n_steps, L, seed, workers, res.x_T, res.y_T, truncations); break;
    case 2: detail::run_euler<2>(p, cfg.n_steps, L, seed, workers, res.x_T, res.y_T, truncations); break;
    case 3: detail::run_euler<3>(p, cfg.n_steps, L, seed, workers, res.x_T, res.y_T, truncations); break;
    case 4: detail::run_euler<4>(p, cfg.n_steps, L, seed, workers, res.x_T, res.y_T, truncations); break;
    default: detail::run_euler<5>(p, cfg.n_steps, L, seed, workers, res.x_T, res.y_T, truncations); break;
  }
  res.truncation_fraction =
      static_cast<double>(truncations) / (static_cast<double>(L) * cfg.n_steps);
  return res;
}

}  // namespace wmsv
