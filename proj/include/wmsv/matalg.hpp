#pragma once

#include "wmsv/types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace wmsv {

/// Real symmetric matrix stored canonically (exactly symmetric entries).
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Validates symmetry up to `tol * (1 + |a|_F)` and stores the symmetric part.
  explicit SymMatrix(const Mat& a, double tol = 1e-10) {
    WMSV_REQUIRE(a.rows() == a.cols() && a.rows() >= 1, Errc::NonSymmetric,
                 "matrix must be square with dim >= 1");
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    WMSV_REQUIRE(asym <= tol * (1.0 + a.norm()), Errc::NonSymmetric,
                 "asymmetry " + std::to_string(asym) + " exceeds tolerance");
    m_ = 0.5 * (a + a.transpose());
  }

  static SymMatrix identity(int d) { return SymMatrix(Mat::Identity(d, d)); }
  static SymMatrix zero(int d) { return SymMatrix(Mat::Zero(d, d)); }
  static SymMatrix diag(std::initializer_list<double> entries) {
    Mat m = Mat::Zero(static_cast<int>(entries.size()), static_cast<int>(entries.size()));
    int i = 0;
    for (double e : entries) {
      m(i, i) = e;
      ++i;
    }
    return SymMatrix(m);
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Mat m_;
};

struct SymEigen {
  Vec values;  // ascending
  Mat vectors;  // columns
};

/// Eigendecomposition of a symmetric matrix. Closed form for d <= 2.
inline SymEigen sym_eig(const Mat& a) {
  const int d = static_cast<int>(a.rows());
  SymEigen out;
  if (d == 1) {
    out.values = Vec::Constant(1, a(0, 0));
    out.vectors = Mat::Identity(1, 1);
    return out;
  }
  if (d == 2) {
    const double p = a(0, 0), r = a(1, 1), q = 0.5 * (a(0, 1) + a(1, 0));
    out.values.resize(2);
    out.vectors.resize(2, 2);
    if (q == 0.0) {
      if (p <= r) {
        out.values << p, r;
        out.vectors << 1, 0, 0, 1;
      } else {
        out.values << r, p;
        out.vectors << 0, 1, 1, 0;
      }
      return out;
    }
    // Jacobi rotation annihilating the off-diagonal entry.
    const double tau = (r - p) / (2.0 * q);
    const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const double l1 = p - t * q, l2 = r + t * q;
    if (l1 <= l2) {
      out.values << l1, l2;
      out.vectors << c, s, -s, c;
    } else {
      out.values << l2, l1;
      out.vectors << s, c, c, -s;
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  WMSV_REQUIRE(es.info() == Eigen::Success, Errc::NoConvergence, "symmetric eigensolver failed");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

namespace detail {
inline void require_symmetric(const Mat& a) {
  WMSV_REQUIRE(a.rows() == a.cols(), Errc::NonSymmetric, "matrix must be square");
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  WMSV_REQUIRE(asym <= 1e-10 * (1.0 + a.norm()), Errc::NonSymmetric,
               "asymmetry " + std::to_string(asym) + " exceeds tolerance");
}
}  // namespace detail

/// Symmetric PSD square root. Eigenvalues in [-1e-12 |a|_F, 0) are clamped to zero.
inline Mat sqrt_psd(const Mat& a) {
  detail::require_symmetric(a);
  const SymEigen e = sym_eig(a);
  const double tol_eig = 1e-12 * a.norm();
  Vec root(e.values.size());
  for (int i = 0; i < e.values.size(); ++i) {
    WMSV_REQUIRE(e.values(i) >= -tol_eig, Errc::IndefiniteInput,
                 "eigenvalue " + std::to_string(e.values(i)) + " is negative");
    root(i) = std::sqrt(std::max(e.values(i), 0.0));
  }
  Mat s = e.vectors * root.asDiagonal() * e.vectors.transpose();
  return 0.5 * (s + s.transpose());
}

inline SymMatrix sqrt_psd(const SymMatrix& a) { return SymMatrix(sqrt_psd(a.mat())); }

/// Projection onto the PSD cone: negative eigenvalues are replaced by zero.
inline Mat positive_part(const Mat& a, bool* truncated = nullptr) {
  detail::require_symmetric(a);
  const SymEigen e = sym_eig(a);
  if (truncated) *truncated = e.values.minCoeff() < 0.0;
  if (e.values.minCoeff() >= 0.0) return 0.5 * (a + a.transpose());
  const Vec clipped = e.values.cwiseMax(0.0);
  Mat p = e.vectors * clipped.asDiagonal() * e.vectors.transpose();
  return 0.5 * (p + p.transpose());
}

inline SymMatrix positive_part(const SymMatrix& a) { return SymMatrix(positive_part(a.mat())); }

/// e^{t a} by Pade scaling and squaring.
inline Mat matrix_exp(const Mat& a, double t = 1.0) {
  const Eigen::MatrixXd scaled = t * Eigen::MatrixXd(a);
  return Mat(scaled.exp());
}

/// Product without the NaN-recovery branch of std::complex (finite inputs only).
inline cd cmul(cd a, cd b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Eigenvalues of [[a, b], [c, d]], the larger in modulus first.
inline void eig2(cd a, cd b, cd c, cd d, cd& l1, cd& l2) {
  const cd m = 0.5 * (a + d);
  const cd half_diff = 0.5 * (a - d);
  const cd det = cmul(a, d) - cmul(b, c);
  const cd s = std::sqrt(cmul(half_diff, half_diff) + cmul(b, c));
  l1 = std::norm(m + s) >= std::norm(m - s) ? m + s : m - s;
  const double n1 = std::norm(l1);
  // det / l1 without the scaling path of complex division; |l1| is not tiny here.
  l2 = n1 == 0.0 ? cd(0.0) : cmul(det, std::conj(l1)) / n1;
}

/// Eigenvalues of a general complex matrix (unordered).
inline CVec eig_complex(const CMat& a) {
  const int d = static_cast<int>(a.rows());
  CVec out(d);
  if (d == 1) {
    out(0) = a(0, 0);
    return out;
  }
  if (d == 2) {
    eig2(a(0, 0), a(0, 1), a(1, 0), a(1, 1), out(0), out(1));
    return out;
  }
  Eigen::ComplexEigenSolver<CMat> es(a, false);
  WMSV_REQUIRE(es.info() == Eigen::Success, Errc::NoConvergence, "complex eigensolver failed");
  return es.eigenvalues();
}

/// Tracks a continuous argument along a sequence of nonzero complex numbers.
/// The first value gets its principal argument in (-pi, pi].
class ArgTracker {
 public:
  explicit ArgTracker(double max_jump = std::numbers::pi) : max_jump_(max_jump) {}

  /// Returns the continuous argument of z given the previously pushed values.
  double push(cd z) {
    WMSV_REQUIRE(z != cd(0.0), Errc::ZeroCrossing, "sequence attains zero");
    const double principal = std::arg(z);
    if (!started_) {
      started_ = true;
      previous_principal_arg_ = principal;
      return principal;
    }
    double jump = principal - previous_principal_arg_;
    int shift = 0;
    if (jump > std::numbers::pi) {
      shift = -1;
    } else if (jump <= -std::numbers::pi) {
      shift = 1;
    }
    jump += 2.0 * std::numbers::pi * shift;
    WMSV_REQUIRE(std::abs(jump) < max_jump_, Errc::GridTooCoarse,
                 "consecutive argument jump " + std::to_string(jump) + " too large");
    winding_offset_ += shift;
    previous_principal_arg_ = principal;
    return principal + 2.0 * std::numbers::pi * winding_offset_;
  }

  int winding_offset() const { return winding_offset_; }

 private:
  double max_jump_;
  bool started_ = false;
  double previous_principal_arg_ = 0.0;
  int winding_offset_ = 0;
};

/// Continuous arguments of a sequence (see ArgTracker).
inline std::vector<double> unwrap_args(std::span<const cd> values) {
  ArgTracker tracker;
  std::vector<double> out;
  out.reserve(values.size());
  for (cd z : values) out.push_back(tracker.push(z));
  return out;
}

/// |z_k|^nu e^{i nu arg_k} with arg_k the continuous argument along the sequence.
inline std::vector<cd> continuous_power(std::span<const cd> values, double exponent) {
  const std::vector<double> args = unwrap_args(values);
  std::vector<cd> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = std::polar(std::pow(std::abs(values[k]), exponent), exponent * args[k]);
  }
  return out;
}

inline double trace(const Mat& a) { return a.trace(); }

}  // namespace wmsv
