#pragma once

#include "wmsv/riccati.hpp"
#include "wmsv/rng.hpp"
#include "wmsv/specfun.hpp"

#include <cmath>
#include <memory>
#include <numbers>

namespace wmsv {

/// Noncentral Wishart law W_d(delta, C, Omega); C Omega must be symmetric PSD.
struct WishartLaw {
  double delta = 1.0;
  Mat C;
  Mat Omega;

  int dim() const { return static_cast<int>(C.rows()); }

  /// C Omega, the noncentrality in "mean" form.
  Mat noncentral() const {
    const Mat m = C * Omega;
    return 0.5 * (m + m.transpose());
  }

  Mat mean() const { return delta * C + noncentral(); }

  void validate() const {
    const int d = dim();
    WMSV_REQUIRE(d >= 1 && C.cols() == d && Omega.rows() == d && Omega.cols() == d,
                 Errc::InvalidLaw, "shape mismatch");
    WMSV_REQUIRE(delta > d - 1, Errc::InvalidLaw, "need delta > d - 1");
    WMSV_REQUIRE((C - C.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + C.norm()),
                 Errc::InvalidLaw, "C not symmetric");
    WMSV_REQUIRE(sym_eig(C).values.minCoeff() > 0.0, Errc::InvalidLaw, "C not positive definite");
    const Mat co = C * Omega;
    WMSV_REQUIRE((co - co.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + co.norm()),
                 Errc::InvalidLaw, "C Omega not symmetric");
    WMSV_REQUIRE(sym_eig(noncentral()).values.minCoeff() >= -1e-10 * (1.0 + co.norm()),
                 Errc::InvalidLaw, "C Omega not PSD");
  }
};

/// One draw of a noncentral chi-square with dof delta and noncentrality lambda.
inline double sample_ncchisq(double delta, double lambda, Rng& rng) {
  WMSV_REQUIRE(delta > 0.0 && lambda >= 0.0, Errc::DomainError, "need delta > 0, lambda >= 0");
  if (delta > 1.0) {
    const double z = rng.normal() + std::sqrt(lambda);
    return rng.chi_squared(delta - 1.0) + z * z;
  }
  const long j = rng.poisson(0.5 * lambda);
  return rng.chi_squared(delta + 2.0 * j);
}

/// E[exp(-tr(theta W))] = det(I + 2 theta C)^{-delta/2} exp(-tr[theta (I + 2 C theta)^{-1} C Omega]).
inline double wishart_laplace(const WishartLaw& law, const Mat& theta) {
  const int d = law.dim();
  const Mat I = Mat::Identity(d, d);
  const Mat a = I + 2.0 * theta * law.C;
  const Mat b = I + 2.0 * law.C * theta;
  const double tr = (theta * b.lu().solve(law.noncentral())).trace();
  return std::pow(a.determinant(), -0.5 * law.delta) * std::exp(-tr);
}

namespace detail {

// One exact step of the elementary generator acting on coordinate i, for
// the unit-covariance process over unit time: the Schur complement of the
// other coordinates evolves as a squared Bessel process and the projected
// cross terms as Brownian motion.
inline void wishart_coordinate_step(Mat& X, int i, double delta, Rng& rng) {
  const int d = static_cast<int>(X.rows());
  if (d == 1) {
    X(0, 0) = sample_ncchisq(delta, std::max(X(0, 0), 0.0), rng);
    return;
  }
  int idx[kMaxDim];
  for (int j = 0, k = 0; j < d; ++j) {
    if (j != i) idx[k++] = j;
  }
  const int m = d - 1;
  Mat rest(m, m);
  Vec cross(m);
  for (int a = 0; a < m; ++a) {
    cross(a) = X(idx[a], i);
    for (int b = 0; b < m; ++b) rest(a, b) = X(idx[a], idx[b]);
  }
  const SymEigen e = sym_eig(rest);
  const double tol = 1e-12 * std::max(1.0, rest.trace());
  Vec new_cross = Vec::Zero(m);
  double zz = 0.0;
  double projected = 0.0;
  int rank = 0;
  for (int k = 0; k < m; ++k) {
    const double ev = e.values(k);
    if (ev <= tol) continue;
    ++rank;
    const double coord = e.vectors.col(k).dot(cross) / std::sqrt(ev);
    projected += coord * coord;
    const double z = coord + rng.normal();
    zz += z * z;
    new_cross += (std::sqrt(ev) * z) * e.vectors.col(k);
  }
  const double schur = std::max(X(i, i) - projected, 0.0);
  const double s = sample_ncchisq(delta - rank, schur, rng);
  X(i, i) = s + zz;
  for (int a = 0; a < m; ++a) {
    X(idx[a], i) = new_cross(a);
    X(i, idx[a]) = new_cross(a);
  }
}

}  // namespace detail

/// Precomputed exact sampler for one law (Cholesky factor and reduced start).
class WishartSampler {
 public:
  explicit WishartSampler(const WishartLaw& law) : law_(law) {
    law_.validate();
    const Eigen::LLT<Mat> llt(law_.C);
    WMSV_REQUIRE(llt.info() == Eigen::Success, Errc::InvalidLaw, "Cholesky of C failed");
    A_ = llt.matrixL();
    const Mat Ainv = A_.inverse();
    const Mat start = Ainv * law_.noncentral() * Ainv.transpose();
    start_ = 0.5 * (start + start.transpose());
  }

  const WishartLaw& law() const { return law_; }

  Mat operator()(Rng& rng) const {
    const int d = law_.dim();
    Mat X = start_;
    for (int i = 0; i < d; ++i) detail::wishart_coordinate_step(X, i, law_.delta, rng);
    Mat W = A_ * X * A_.transpose();
    W = (0.5 * (W + W.transpose())).eval();
    // Near-singular draws are legitimate (for delta close to d - 1 a sizeable share
    // has lambda_min / tr below 1e-13), so they are kept and only rounding is removed.
    if (d > 1 && sym_eig(W).values.minCoeff() < 0.0) W = positive_part(W);
    return W;
  }

 private:
  WishartLaw law_;
  Mat A_;
  Mat start_;
};

/// One exact draw from W_d(delta, C, Omega) for any real delta > d - 1.
inline Mat sample_wishart_exact(const WishartLaw& law, Rng& rng) { return WishartSampler(law)(rng); }

/// Terminal law of X_T from the u = 0 solution: W_d(delta, V0, V0^{-1} Psi0' x Psi0).
inline WishartLaw terminal_law(const ModelParams& p, const RiccatiSolution& sol0) {
  WMSV_REQUIRE(sol0.u == cd(0.0), Errc::DomainError, "terminal law needs the u = 0 solution");
  WishartLaw law;
  law.delta = p.delta;
  const Mat V = sol0.V.real();
  law.C = 0.5 * (V + V.transpose());
  const Mat Psi = sol0.Psi.real();
  Mat nc = Psi.transpose() * p.x * Psi;
  nc = (0.5 * (nc + nc.transpose())).eval();
  const Eigen::FullPivLU<Mat> lu(law.C);
  WMSV_REQUIRE(lu.isInvertible(), Errc::IllConditioned, "V(0,0) is singular");
  const SymEigen e = sym_eig(law.C);
  WMSV_REQUIRE(e.values.maxCoeff() < 1e12 * e.values.minCoeff(), Errc::IllConditioned,
               "V(0,0) condition number above 1e12");
  law.Omega = lu.solve(nc);
  law.validate();
  return law;
}

inline WishartLaw terminal_law(const ModelParams& p, double tol = 1e-10) {
  return terminal_law(p, solve_conditional(p, 0.0, tol));
}

/// Integer delta >= d: X_T = N'N with rows N_k ~ Normal(mean row k, V0), mean = N0 Psi0,
/// N0 = [sqrt(x); 0].
class IntegerWishartSampler {
 public:
  IntegerWishartSampler(const ModelParams& p, const RiccatiSolution& sol0) : d_(p.d) {
    WMSV_REQUIRE(p.delta == std::round(p.delta), Errc::NotInteger, "delta must be an integer");
    WMSV_REQUIRE(p.delta >= p.d, Errc::NotInteger, "need integer delta >= d");
    rows_ = static_cast<int>(p.delta);
    mean_top_ = sqrt_psd(p.x) * sol0.Psi.real();
    const Mat V = sol0.V.real();
    const Eigen::LLT<Mat> llt(0.5 * (V + V.transpose()));
    WMSV_REQUIRE(llt.info() == Eigen::Success, Errc::IllConditioned, "V(0,0) not positive definite");
    chol_ = llt.matrixL();
  }

  Mat operator()(Rng& rng) const {
    Mat out = Mat::Zero(d_, d_);
    Vec z(d_);
    for (int k = 0; k < rows_; ++k) {
      for (int j = 0; j < d_; ++j) z(j) = rng.normal();
      Vec row = chol_ * z;
      if (k < d_) row += mean_top_.row(k).transpose();
      out.noalias() += row * row.transpose();
    }
    return out;
  }

 private:
  int d_;
  int rows_;
  Mat mean_top_;
  Mat chol_;
};

inline Mat sample_wishart_integer(const ModelParams& p, Rng& rng) {
  return IntegerWishartSampler(p, solve_conditional(p, 0.0))(rng);
}

/// Density of W_d(delta, C, Omega) at an SPD y.
inline double wishart_density(const Mat& y, const WishartLaw& law, double eps = 1e-14) {
  law.validate();
  const int d = law.dim();
  WMSV_REQUIRE(y.rows() == d && y.cols() == d, Errc::DomainError, "shape mismatch");
  const SymEigen ey = sym_eig(0.5 * (y + y.transpose()));
  WMSV_REQUIRE(ey.values.minCoeff() > 0.0, Errc::DomainError, "y must be positive definite");
  const Eigen::LLT<Mat> llt(law.C);
  const Mat Cinv = llt.solve(Mat::Identity(d, d));
  double logdet_y = 0.0;
  for (int i = 0; i < d; ++i) logdet_y += std::log(ey.values(i));
  const double logdet_c = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  double log_p = 0.5 * (law.delta - d - 1) * logdet_y - 0.5 * d * law.delta * std::numbers::ln2 -
                 log_mv_gamma(0.5 * law.delta, d) - 0.5 * law.delta * logdet_c -
                 0.5 * (Cinv * y).trace() - 0.5 * law.Omega.trace();
  const Mat arg = 0.25 * law.Omega * Cinv * y;
  const CVec alpha = eig_complex(arg.cast<cd>());
  // Building the series tables dominates a single evaluation, so keep the last one.
  thread_local std::unique_ptr<Hyp0F1> hyp;
  if (!hyp || hyp->b() != 0.5 * law.delta || hyp->dim() != d) hyp = std::make_unique<Hyp0F1>(0.5 * law.delta, d);
  const cd f = (*hyp)(std::span<const cd>(alpha.data(), d), eps).value;
  return std::exp(log_p) * f.real();
}

}  // namespace wmsv
