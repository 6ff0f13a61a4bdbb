#include "fixtures.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <algorithm>

using namespace wmsv;
using namespace wmsv::testing;

namespace {

std::vector<cd> random_alpha(int d, std::mt19937_64& g, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<cd> a(d);
  for (auto& v : a) v = cd(n(g), n(g));
  return a;
}

double abs_sum(const std::vector<cd>& a) {
  double s = 0.0;
  for (cd v : a) s += std::abs(v);
  return s;
}

}  // namespace

TEST(Partitions, SmallEnumeration) {
  const auto p = partitions_of(3, 2);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].parts(), (std::vector<int>{3, 0}));
  EXPECT_EQ(p[1].parts(), (std::vector<int>{2, 1}));
}

TEST(Partitions, FiveDimensionalMinima) {
  EXPECT_EQ(partitions_of(8, 5).back().parts(), (std::vector<int>{2, 2, 2, 1, 1}));
  EXPECT_EQ(partitions_of(9, 5).back().parts(), (std::vector<int>{2, 2, 2, 2, 1}));
  EXPECT_EQ(partitions_of(10, 5).back().parts(), (std::vector<int>{2, 2, 2, 2, 2}));
  EXPECT_EQ(partitions_of(11, 5).back().parts(), (std::vector<int>{3, 2, 2, 2, 2}));
}

TEST(Partitions, DescendingUniqueAndComplete) {
  for (int d = 1; d <= 5; ++d) {
    for (int k = 0; k <= 12; ++k) {
      const auto p = partitions_of(k, d);
      for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(p[i].weight(), k);
        if (i > 0) {
          EXPECT_TRUE(p[i - 1] > p[i]);
        }
      }
      EXPECT_EQ(p.back(), smallest_partition(k, d));
    }
  }
  // Partition counts p(12) restricted to <= 3 parts.
  EXPECT_EQ(partitions_of(12, 3).size(), 19u);
}

TEST(HypCoeff, Examples) {
  const cd b(2.5, 0.0);
  EXPECT_EQ(hyp_coeff(b, Partition({0, 0})), cd(1.0));
  EXPECT_LT(std::abs(hyp_coeff(b, Partition({1, 0, 0})) - b), 1e-15);
  EXPECT_LT(std::abs(hyp_coeff(b, Partition({2, 1})) - 17.5), 1e-12);
  // d = 1 is the rising factorial.
  EXPECT_LT(std::abs(hyp_coeff(cd(0.3, 0.2), Partition({4})) - rising(cd(0.3, 0.2), 4)), 1e-15);
}

TEST(HypCoeff, ForbiddenLattice) {
  try {
    hyp_coeff(cd(0.5), Partition({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ForbiddenParameter);
  }
  EXPECT_THROW(hyp_coeff(cd(0.0), Partition({1})), Error);
  EXPECT_NO_THROW(hyp_coeff(cd(0.75), Partition({1, 1})));
}

TEST(SmallestCoeff, HandValues) {
  const auto s = smallest_coeff_seq(2.0, 2, 3);
  EXPECT_NEAR(s[0], 2.0, 1e-14);
  EXPECT_NEAR(s[1], 3.0, 1e-14);
  EXPECT_NEAR(s[2], 9.0, 1e-14);
  const auto r = smallest_coeff_seq(1.3, 1, 6);
  for (int k = 1; k <= 6; ++k) EXPECT_NEAR(r[k - 1], rising(1.3, k).real(), 1e-12 * r[k - 1]);
}

TEST(SmallestCoeff, MatchesMinimumPartitionAndIsMinimal) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int d = 1; d <= 5; ++d) {
    for (int trial = 0; trial < 5; ++trial) {
      const double b = 0.5 * (d - 1) + 0.05 + u(g);
      const auto seq = smallest_coeff_seq(b, d, 10);
      for (int k = 1; k <= 10; ++k) {
        const auto parts = partitions_of(k, d);
        const double hat = hyp_coeff(b, parts.back()).real();
        EXPECT_NEAR(seq[k - 1], hat, 1e-12 * hat);
        for (const auto& iota : parts) EXPECT_LE(hat, hyp_coeff(b, iota).real() * (1 + 1e-12));
        if (k >= d && k < 10) {
          EXPECT_LT(seq[k - 1], seq[k]);
        }
      }
    }
  }
}

TEST(Zonal, FirstDegreeIsTrace) {
  std::mt19937_64 g(12);
  for (int d = 1; d <= 4; ++d) {
    const auto a = random_alpha(d, g, 1.0);
    std::vector<int> parts(d, 0);
    parts[0] = 1;
    cd tr = 0.0;
    for (cd v : a) tr += v;
    EXPECT_LT(std::abs(zonal(Partition(parts), a) - tr), 1e-13);
  }
}

TEST(Zonal, NormalizationProperty) {
  std::mt19937_64 g(13);
  for (int d = 1; d <= 3; ++d) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = random_alpha(d, g, 1.0);
      cd tr = 0.0;
      for (cd v : a) tr += v;
      for (int k = 0; k <= 8; ++k) {
        cd sum = 0.0;
        for (const auto& iota : partitions_of(k, d)) sum += zonal(iota, a);
        EXPECT_LE(std::abs(sum - std::pow(tr, k)), 1e-10 * std::max(1.0, std::pow(abs_sum(a), k)))
            << "d=" << d << " k=" << k;
      }
    }
  }
}

TEST(Zonal, NonnegativeCoefficientsBound) {
  std::mt19937_64 g(14);
  for (int d = 2; d <= 3; ++d) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_alpha(d, g, 1.0);
      std::vector<cd> mod(d);
      for (int i = 0; i < d; ++i) mod[i] = std::abs(a[i]);
      for (int k = 1; k <= 6; ++k) {
        for (const auto& iota : partitions_of(k, d)) {
          EXPECT_LE(std::abs(zonal(iota, a)), zonal(iota, mod).real() * (1 + 1e-12) + 1e-14);
        }
      }
    }
  }
}

TEST(Zonal, TwoDimensionalClosedForm) {
  // C_(2) = M_(2) + (2/3) M_(1,1) and C_(1,1) = (4/3) M_(1,1) in monomial form.
  const std::vector<cd> a = {cd(1.5), cd(0.0)};
  EXPECT_LT(std::abs(zonal(Partition({2, 0}), a) - 2.25), 1e-13);
  EXPECT_LT(std::abs(zonal(Partition({1, 1}), a)), 1e-13);
  const std::vector<cd> e = {cd(1.0), cd(1.0)};
  EXPECT_NEAR(zonal(Partition({1, 1}), e).real(), 4.0 / 3.0, 1e-13);
  EXPECT_NEAR(zonal(Partition({2, 0}), e).real(), 8.0 / 3.0, 1e-13);
}

TEST(Zonal, WeightBeyondTable) {
  const std::vector<cd> a = {cd(0.1), cd(0.1), cd(0.1)};
  std::vector<int> parts = {default_zonal_weight(3) + 1, 0, 0};
  try {
    zonal(Partition(parts), a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::WeightExceedsTable);
  }
}

TEST(Hyp0F1, ZeroArgumentIsOne) {
  for (int d = 1; d <= 4; ++d) {
    const std::vector<cd> z(d, cd(0.0));
    EXPECT_EQ(hyp0f1(0.5 * d + 0.3, z, 1e-12), cd(1.0));
  }
}

TEST(Hyp0F1, ScalarBesselRelation) {
  for (double nu : {-0.4, 0.0, 0.5, 1.3, 3.0}) {
    for (double x : {0.1, 1.0, 4.0, 9.0}) {
      const std::vector<cd> arg = {cd(0.25 * x * x)};
      const cd f = hyp0f1(nu + 1.0, arg, 1e-14);
      const double oracle = std::pow(0.5 * x, -nu) * std::tgamma(nu + 1.0) *
                            boost::math::cyl_bessel_i(nu, x);
      EXPECT_NEAR(f.real(), oracle, 1e-11 * oracle) << nu << " " << x;
    }
  }
}

TEST(Hyp0F1, ScalarSeriesTermByTerm) {
  const double b = 1.7;
  const cd z(0.8, -1.1);
  Hyp0F1 h(b, 1);
  cd term = 1.0, sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    term *= z / (k * (b + k - 1));
    sum += term;
    const cd t = h.truncated(std::span<const cd>(&z, 1), k);
    EXPECT_LT(std::abs(t - sum), 1e-14 * std::abs(sum));
  }
}

TEST(Hyp0F1, DegenerateEigenvalueReducesToScalar) {
  // Only one-part partitions survive at (a, 0).
  const double b = 1.6;
  const std::vector<cd> pair = {cd(0.7, 0.4), cd(0.0)};
  const std::vector<cd> single = {cd(0.7, 0.4)};
  EXPECT_LT(std::abs(hyp0f1(b, pair, 1e-14) - hyp0f1(b, single, 1e-14)), 1e-13);
}

TEST(Hyp0F1, SelfConvergence) {
  std::mt19937_64 g(15);
  Hyp0F1 h(1.6, 2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = random_alpha(2, g, 1.2);
    if (abs_sum(a) > 5.0) continue;
    const auto v = h(a, 1e-12);
    const cd more = h.truncated(a, std::min(v.order + 20, h.max_order()));
    EXPECT_LE(std::abs(more - v.value), 1e-12);
  }
}

TEST(Hyp0F1, TruncationBoundHolds) {
  std::mt19937_64 g(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3;
    const double b = 0.5 * (d - 1) + 0.05 + 3.0 * u(g);
    std::vector<cd> a = random_alpha(d, g, 1.0);
    const double target = 10.0 * u(g);
    const double s = abs_sum(a);
    for (auto& v : a) v *= target / s;
    Hyp0F1 h(b, d);
    const double eps = std::pow(10.0, -4.0 - 8.0 * u(g));
    const auto v = h(a, eps);
    const cd more = h.truncated(a, std::min(v.order + 20, h.max_order()));
    EXPECT_LE(std::abs(more - v.value), v.bound) << "trial " << trial;
    EXPECT_LE(v.bound, eps);
  }
}

TEST(Hyp0F1, PairPathMatchesDeterminantForm) {
  // The power-sum evaluation used for d = 2 against the plain zonal sum.
  std::mt19937_64 g(17);
  Hyp0F1 h(1.9, 2);
  const auto table = zonal_table(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_alpha(2, g, 1.0);
    const int m = 12;
    cd direct = 0.0;
    for (int k = 0; k <= m; ++k) {
      for (const auto& iota : partitions_of(k, 2)) {
        direct += table->zonal(iota, a) / (hyp_coeff(1.9, iota) * std::tgamma(k + 1.0));
      }
    }
    EXPECT_LT(std::abs(h.truncated(a, m) - direct), 1e-12 * std::abs(direct));
  }
}

TEST(Hyp0F1, UnreachableTruncation) {
  const std::vector<cd> huge = {cd(400.0), cd(300.0)};
  try {
    hyp0f1(1.6, huge, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TruncationUnreachable);
  }
}

TEST(BesselI, Origin) {
  EXPECT_EQ(bessel_i(0.0, 0.0), cd(1.0));
  EXPECT_EQ(bessel_i(0.7, 0.0), cd(0.0));
}

TEST(BesselI, HalfIntegerIdentity) {
  for (double z : {0.01, 0.5, 2.0, 10.0, 30.0, 120.0}) {
    const double oracle = std::sqrt(2.0 / (std::numbers::pi * z)) * std::sinh(z);
    EXPECT_NEAR(bessel_i(0.5, z).real(), oracle, 1e-10 * oracle) << z;
  }
}

TEST(BesselI, AgreesWithBoostOnRealLine) {
  for (double nu : {-0.6, 0.0, 0.13, 1.0, 2.5}) {
    for (double z : {0.3, 3.0, 16.9, 17.1, 40.0, 150.0}) {
      const double oracle = boost::math::cyl_bessel_i(nu, z);
      EXPECT_NEAR(bessel_i(nu, z).real(), oracle, 1e-10 * oracle) << nu << " " << z;
    }
  }
}

TEST(BesselI, ComplexLargeArgumentBranch) {
  // Past the switch radius the Hankel branch must reproduce the power series.
  for (double nu : {-0.3, 0.4, 1.7}) {
    for (double theta : {-1.4, -0.5, 0.0, 0.8, 1.5}) {
      for (double radius : {17.001, 30.0}) {
        const cd w = std::polar(radius, theta);
        const cd q = 0.25 * w * w;
        cd term = 1.0 / std::tgamma(nu + 1.0), sum = term;
        double mass = std::abs(term);
        for (int k = 1; k < 400; ++k) {
          term *= q / (k * (nu + k));
          sum += term;
          mass += std::abs(term);
        }
        const double scale = std::exp(-w.real());
        EXPECT_LT(std::abs(bessel_i_entire_scaled(nu, w) - sum * scale), 1e-13 * mass * scale);
      }
    }
  }
}

TEST(BesselI, ConsistentWithHyp0F1) {
  for (double nu : {0.0, 0.634, 2.0}) {
    for (cd z : {cd(0.5, 0.2), cd(3.0, -1.0), cd(6.0, 4.0)}) {
      const std::vector<cd> arg = {0.25 * z * z};
      const cd viaf = std::pow(0.5 * z, nu) / std::tgamma(nu + 1.0) * hyp0f1(nu + 1.0, arg, 1e-15);
      EXPECT_LT(std::abs(bessel_i(nu, z) - viaf), 1e-10 * std::abs(viaf));
    }
  }
}

TEST(BesselI, DomainErrors) {
  EXPECT_THROW(bessel_i(-1.5, 1.0), Error);
  EXPECT_THROW(bessel_i(0.5, 250.0), Error);
  EXPECT_NO_THROW(bessel_i_scaled(0.5, 250.0));
}

TEST(MvGamma, Examples) {
  EXPECT_NEAR(mv_gamma(3.7, 1).real(), std::tgamma(3.7), 1e-12 * std::tgamma(3.7));
  const double oracle = std::sqrt(std::numbers::pi) * std::tgamma(2.0) * std::tgamma(1.5);
  EXPECT_NEAR(mv_gamma(2.0, 2).real(), oracle, 1e-12 * oracle);
  for (int d = 1; d <= 4; ++d) {
    const double a = 0.5 * d + 0.37;
    double prod = 1.0;
    for (int j = 0; j < d; ++j) prod *= a - 0.5 * j;
    EXPECT_NEAR((mv_gamma(a + 1.0, d) / mv_gamma(a, d)).real(), prod, 1e-11 * prod);
    EXPECT_NEAR(log_mv_gamma(a, d), std::log(mv_gamma(a, d).real()), 1e-12);
  }
  const cd z(2.3, 0.7);
  const cd ratio = mv_gamma(z + 1.0, 2) / mv_gamma(z, 2);
  EXPECT_LT(std::abs(ratio - z * (z - 0.5)), 1e-11 * std::abs(ratio));
  EXPECT_THROW(mv_gamma(0.4, 2), Error);
}

TEST(MvGamma, DefiningIntegralAtDimensionTwo) {
  // Gamma_2(a) = int_{S_2^+} e^{-tr y} det(y)^{a - 3/2} dy over (y11, y22, y12)
  // using y = L L' with L lower triangular: dy = 4 l11^2 l22 dl.
  const double a = 2.0;
  const int n = 400;
  const double top = 9.0;
  double total = 0.0;
  const double hstep = top / n;
  for (int i = 0; i < n; ++i) {
    const double l11 = (i + 0.5) * hstep;
    for (int j = 0; j < n; ++j) {
      const double l22 = (j + 0.5) * hstep;
      // The l21 integral is Gaussian: int e^{-l21^2} = sqrt(pi).
      const double det = l11 * l11 * l22 * l22;
      total += std::exp(-l11 * l11 - l22 * l22) * std::pow(det, a - 1.5) * 4.0 * l11 * l11 * l22;
    }
  }
  total *= hstep * hstep * std::sqrt(std::numbers::pi);
  EXPECT_NEAR(total, mv_gamma(a, 2).real(), 1e-4 * total);
}
