#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace wmsv;
using namespace wmsv::testing;

namespace {

double forward_minus_strike(const ModelParams& p, double K) {
  return std::exp(p.y) - K * std::exp(-p.r * p.T);
}

}  // namespace

TEST(McCallPrice, ConstantSamples) {
  const std::vector<double> y(50, std::log(2.0 * 1.5));
  const McResult mc = mc_call_price(y, 0.03, 2.0, 1.5);
  EXPECT_NEAR(mc.estimate, std::exp(-0.06) * 1.5, 1e-15);
  EXPECT_EQ(mc.std_error, 0.0);
  EXPECT_EQ(mc.n_paths, 50u);
}

TEST(McCallPrice, ZeroStrikeIsTheStock) {
  std::mt19937_64 g(71);
  std::normal_distribution<double> n(0.1, 0.3);
  std::vector<double> y(1000);
  for (double& v : y) v = n(g);
  const McResult mc = mc_call_price(y, 0.02, 1.0, 0.0);
  const auto direct = mean_se(y.begin(), y.end(), [](double v) { return std::exp(v); });
  EXPECT_NEAR(mc.estimate, std::exp(-0.02) * direct.mean, 1e-13);
  EXPECT_NEAR(mc.std_error, std::exp(-0.02) * direct.se, 1e-13);
  EXPECT_NEAR(mc.ci_low, mc.estimate - 1.96 * mc.std_error, 1e-15);
  EXPECT_NEAR(mc.ci_high, mc.estimate + 1.96 * mc.std_error, 1e-15);
}

TEST(McCallPrice, NeedsTwoSamples) {
  const std::vector<double> y = {0.1};
  EXPECT_THROW(mc_call_price(y, 0.0, 1.0, 1.0), Error);
}

TEST(ReferencePrice, TwoFactorExperiments) {
  EXPECT_NEAR(call_price_reference(two_factor(3.2), 1.0), 0.191575, 5e-6);
  EXPECT_NEAR(call_price_reference(two_factor(1.1), 1.0), 0.113000, 5e-6);
}

TEST(ReferencePrice, HestonExperiments) {
  EXPECT_NEAR(call_price_reference(heston_set(1.0), 100.0), 6.8061, 5e-4);
  EXPECT_NEAR(call_price_reference(heston_set(0.25), 100.0), 2.6709, 5e-4);
}

TEST(ReferencePrice, PutCallParity) {
  for (const ModelParams& p : {two_factor(3.2), to_wmsv(heston_set(1.0))}) {
    const double K = std::exp(p.y) * 1.05;
    const double call = call_price_reference(p, K);
    const double put = put_price_reference(p, K);
    EXPECT_NEAR(call - put, forward_minus_strike(p, K), 1e-6);
  }
}

TEST(ReferencePrice, IndependentOfDamping) {
  const ModelParams p = two_factor(1.1);
  const double base = call_price_reference(p, 1.0);
  for (double alpha : {0.75, 1.0, 2.0, 3.0}) {
    PricingOptions opt;
    opt.alpha = alpha;
    EXPECT_NEAR(call_price_reference(p, 1.0, opt), base, 1e-6) << "alpha = " << alpha;
  }
  const ModelParams h = to_wmsv(heston_set(0.25));
  const double hbase = call_price_reference(h, 100.0);
  for (double alpha : {0.75, 3.0}) {
    PricingOptions opt;
    opt.alpha = alpha;
    EXPECT_NEAR(call_price_reference(h, 100.0, opt), hbase, 1e-6) << "alpha = " << alpha;
  }
}

TEST(ReferencePrice, LevyInversionAgrees) {
  for (const ModelParams& p : {two_factor(3.2), two_factor(1.1)}) {
    EXPECT_NEAR(levy_price_reference(p, 1.0), call_price_reference(p, 1.0), 1e-4);
  }
  const ModelParams h = to_wmsv(heston_set(1.0));
  EXPECT_NEAR(levy_price_reference(h, 100.0), call_price_reference(h, 100.0), 1e-4);
}

TEST(ReferencePrice, DampingInvalid) {
  const ModelParams p = to_wmsv(heston_set(5.0));
  for (double alpha : {39.0, 0.0, -1.0}) {
    PricingOptions opt;
    opt.alpha = alpha;
    try {
      call_price_reference(p, 100.0, opt);
      ADD_FAILURE() << "alpha = " << alpha;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::DampingInvalid) << "alpha = " << alpha;
    }
  }
}

TEST(ReferencePrice, MatchesExactSimulation) {
  const ModelParams p = two_factor(3.2);
  const auto sim = simulate(WmsvCondCf(p), 20000, 72);
  const McResult mc = mc_call_price(sim.y_T, p.r, p.T, 1.0);
  EXPECT_TRUE(mc.covers(call_price_reference(p, 1.0))) << mc.estimate << " +- " << mc.std_error;
}
