#pragma once

#include "wmsv/matalg.hpp"

#include <cmath>
#include <string>

namespace wmsv {

/// WMSV parameters: dX = (delta S'S + HX + XH')dt + sqrt(X) dW Sigma + Sigma' dW' sqrt(X),
/// dY = (r - tr X / 2) dt + tr[sqrt(X)(dW R' + dZ sqrt(I - RR'))].
struct ModelParams {
  int d = 1;
  double delta = 1.0;
  double r = 0.0;
  Mat x;
  double y = 0.0;
  Mat H;
  Mat Sigma;
  Mat R;
  double T = 1.0;

  Mat gram() const { return Sigma.transpose() * Sigma; }

  /// sqrt(I - RR'), the loading of the independent driver.
  Mat orthogonal_loading() const { return sqrt_psd(Mat(Mat::Identity(d, d) - R * R.transpose())); }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(Errc::InvalidParams, msg); };
    if (d < 1 || d > kMaxDim) fail("dimension must lie in [1, 5]");
    auto square = [&](const Mat& m, const char* name) {
      if (m.rows() != d || m.cols() != d) fail(std::string(name) + " must be d x d");
      if (!m.allFinite()) fail(std::string(name) + " has non-finite entries");
    };
    square(x, "x");
    square(H, "H");
    square(Sigma, "Sigma");
    square(R, "R");
    if (!(delta > d - 1)) fail("need delta > d - 1");
    if (!(T > 0.0)) fail("need T > 0");
    if (!std::isfinite(r) || !std::isfinite(y)) fail("r and y must be finite");
    const double sn = Sigma.norm();
    if (!(std::abs(Sigma.determinant()) > 1e-12 * std::pow(sn, d))) fail("Sigma is singular");
    if ((x - x.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + x.norm())) fail("x not symmetric");
    if (sym_eig(x).values.minCoeff() < -1e-12 * x.norm()) fail("x is not PSD");
    const Mat gap = Mat::Identity(d, d) - R * R.transpose();
    if (sym_eig(0.5 * (gap + gap.transpose())).values.minCoeff() < -1e-12) fail("I - RR' is not PSD");
  }
};

}  // namespace wmsv
