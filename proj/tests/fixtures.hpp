#pragma once

#include "wmsv/wmsv.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace wmsv::testing {

/// Two-factor parameter set used throughout the experiments (x, H, Sigma, R, K = 1).
inline ModelParams two_factor(double delta) {
  ModelParams p;
  p.d = 2;
  p.delta = delta;
  p.r = 0.0;
  p.y = 0.0;
  p.T = 1.0;
  p.x.resize(2, 2);
  p.x << 0.0298, 0.0119, 0.0119, 0.0108;
  p.H.resize(2, 2);
  p.H << -1.2479, -0.8985, -0.0820, -1.1433;
  p.Sigma.resize(2, 2);
  p.Sigma << 0.3417, 0.3493, 0.1848, 0.3090;
  p.R.resize(2, 2);
  p.R << -0.2243, -0.1244, -0.2545, -0.7230;
  return p;
}

inline HestonParams heston_set(double T) {
  HestonParams hp;
  hp.kappa = 6.21;
  hp.theta = 0.019;
  hp.sigma = 0.61;
  hp.rho = -0.7;
  hp.r = 0.0319;
  hp.x = 0.010201;
  hp.y = std::log(100.0);
  hp.T = T;
  return hp;
}

inline Mat random_matrix(int d, std::mt19937_64& g, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = n(g);
  return m;
}

inline Mat random_spd(int d, std::mt19937_64& g, double scale = 1.0) {
  const Mat a = random_matrix(d, g, scale);
  Mat s = a * a.transpose() + 0.1 * scale * scale * Mat::Identity(d, d);
  return 0.5 * (s + s.transpose());
}

inline CMat random_complex(int d, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  CMat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cd(n(g), n(g));
  return m;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <class It, class F>
MeanSe mean_se(It begin, It end, F&& f) {
  double s = 0.0, s2 = 0.0;
  std::size_t n = 0;
  for (It it = begin; it != end; ++it, ++n) {
    const double v = f(*it);
    s += v;
    s2 += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt(std::max(s2 / n - m * m, 0.0) / (n - 1))};
}

inline MeanSe mean_se(const std::vector<double>& v) {
  return mean_se(v.begin(), v.end(), [](double x) { return x; });
}

inline double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

// Asymptotic 1% critical value of the Kolmogorov distribution.
inline constexpr double kKs99 = 1.628;

template <class Cdf>
inline double ks_one_sample(std::vector<double> x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace wmsv::testing
