#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace wmsv;
using namespace wmsv::testing;

namespace {

HestonParams random_heston(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HestonParams hp;
  hp.kappa = 0.5 + 5.0 * u(g);
  hp.theta = 0.01 + 0.1 * u(g);
  hp.sigma = 0.1 + 0.8 * u(g);
  hp.rho = -0.9 + 1.8 * u(g);
  hp.r = 0.05 * u(g);
  hp.x = 0.005 + 0.1 * u(g);
  hp.y = std::log(50.0 + 100.0 * u(g));
  hp.T = 0.1 + 2.0 * u(g);
  return hp;
}

double rel_err(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

// Same assembly as cond_laplace_closed, with the root taken on the other branch.
cd closed_form_negated_root(cd u, const HestonParams& hp, double x, double xT) {
  const double k = hp.kappa, sg = hp.sigma, rho = hp.rho;
  auto eta_at = [&](double s) {
    const cd us = s * u;
    const cd a = k + us * sg * rho;
    return -detail::principal_root(a * a - sg * sg * us * (us + 1.0));
  };
  const auto b = detail::bridge_constants(hp, eta_at);
  const cd log_cf = b.log_pre - u * (hp.y + (hp.r - k * hp.theta * rho / sg) * hp.T) -
                    (b.coth_diff * (x + xT) + u * sg * rho * (xT - x)) / (sg * sg) +
                    detail::bessel_ratio_log(hp, b, x, xT);
  return std::exp(log_cf);
}

// Conditional mean of int_0^T X dt from the CF slope at 0.
double cond_integrated_mean(const HestonParams& hp, double x, double xT) {
  const double h = 1e-3;
  const cd up = bk_integrated_var_cf(h, hp, x, xT);
  const cd dn = bk_integrated_var_cf(-h, hp, x, xT);
  return ((up - dn) / (2.0 * h)).imag();
}

}  // namespace

TEST(HestonMapping, DegreesOfFreedom) {
  EXPECT_NEAR(heston_set(1.0).delta(), 4.0 * 6.21 * 0.019 / (0.61 * 0.61), 1e-15);
  EXPECT_NEAR(heston_set(1.0).delta(), 1.2684, 1e-4);
}

TEST(HestonMapping, RoundTripAndValidity) {
  std::mt19937_64 g(41);
  for (int trial = 0; trial < 50; ++trial) {
    const HestonParams hp = random_heston(g);
    const ModelParams p = to_wmsv(hp);
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.d, 1);
    EXPECT_DOUBLE_EQ(p.Sigma(0, 0), 0.5 * hp.sigma);
    EXPECT_DOUBLE_EQ(p.H(0, 0), -0.5 * hp.kappa);
    EXPECT_DOUBLE_EQ(p.R(0, 0), hp.rho);
    EXPECT_DOUBLE_EQ(p.delta, hp.delta());
    const HestonParams back = from_wmsv(p);
    EXPECT_NEAR(back.kappa, hp.kappa, 1e-15 * hp.kappa);
    EXPECT_NEAR(back.theta, hp.theta, 1e-14 * hp.theta);
    EXPECT_NEAR(back.sigma, hp.sigma, 1e-15 * hp.sigma);
    EXPECT_EQ(back.rho, hp.rho);
    EXPECT_EQ(back.x, hp.x);
    EXPECT_EQ(back.T, hp.T);
  }
}

TEST(HestonMapping, InvalidParameters) {
  HestonParams hp = heston_set(1.0);
  hp.rho = 1.0;
  EXPECT_THROW(to_wmsv(hp), Error);
  hp = heston_set(1.0);
  hp.kappa = 0.0;
  EXPECT_THROW(hp.validate(), Error);
}

TEST(HestonClosedForm, UnitAtZero) {
  const HestonParams hp = heston_set(1.0);
  for (double xT : {0.0, 0.003, 0.02, 0.1}) {
    EXPECT_LT(std::abs(cond_laplace_closed(0.0, hp, hp.x, xT) - 1.0), 1e-13);
  }
}

TEST(HestonClosedForm, MatchesGeneralPipeline) {
  const HestonParams hp = heston_set(1.0);
  const ModelParams p = to_wmsv(hp);
  const WmsvCondCf model(p, CondCfOptions{1e-12, 1e-14});
  for (cd u : {cd(0.0, -1.0), cd(0.0, -5.0), cd(1.0, 2.0)}) {
    const auto s = solve_conditional(p, u, 1e-12);
    WmsvCondCf::Table t;
    t.entries.push_back(model.make_entry(s, 0.0));
    for (double xT : {0.004, 0.019, 0.05}) {
      cd general;
      model.eval(t, Mat::Constant(1, 1, xT), std::span<cd>(&general, 1));
      const cd closed = cond_laplace_closed(u, hp, hp.x, xT);
      EXPECT_LT(rel_err(closed, general), 1e-6) << "u = " << u << ", x_T = " << xT;
    }
  }
}

TEST(HestonClosedForm, EvenInRoot) {
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> re(-0.8, 0.5), im(-12.0, 12.0);
  const HestonParams hp = heston_set(1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const cd u(re(g), im(g));
    for (double xT : {0.005, 0.03}) {
      const cd a = cond_laplace_closed(u, hp, hp.x, xT);
      const cd b = closed_form_negated_root(u, hp, hp.x, xT);
      EXPECT_LT(rel_err(b, a), 1e-10) << "u = " << u;
    }
  }
}

TEST(HestonClosedForm, ZeroEndpointIsTheLimit) {
  const HestonParams hp = heston_set(0.5);
  for (cd u : {cd(0.0, -3.0), cd(0.4, 1.0)}) {
    const cd at0 = cond_laplace_closed(u, hp, hp.x, 0.0);
    const cd near = cond_laplace_closed(u, hp, hp.x, 1e-14);
    EXPECT_LT(rel_err(near, at0), 1e-8);
    HestonParams h0 = hp;
    h0.x = 0.0;
    EXPECT_LT(rel_err(cond_laplace_closed(u, h0, 1e-14, 0.02), cond_laplace_closed(u, h0, 0.0, 0.02)), 1e-8);
  }
}

TEST(HestonClosedForm, TableModelAgrees) {
  const HestonParams hp = heston_set(0.25);
  const HestonCondCf model(hp);
  const std::vector<double> lambdas = {0.5, 3.0, 17.0, 60.0};
  const auto t = model.make_table(lambdas);
  std::vector<cd> out(lambdas.size());
  for (double xT : {0.0, 0.002, 0.04}) {
    model.eval(t, Mat::Constant(1, 1, xT), out);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      const cd ref = cond_laplace_closed(cd(0.0, -lambdas[k]), hp, hp.x, xT);
      EXPECT_LT(std::abs(out[k] - ref), 1e-12 * (1.0 + std::abs(ref)));
    }
  }
}

TEST(CirTerminal, MeanAtExperimentParameters) {
  const HestonParams hp = heston_set(1.0);
  const std::size_t n = 1000000;
  std::vector<double> x(n);
  for (std::size_t l = 0; l < n; ++l) {
    Rng rng(43, l);
    x[l] = sample_cir_terminal(hp, rng);
  }
  const auto est = mean_se(x);
  const double exact = hp.theta + (hp.x - hp.theta) * std::exp(-hp.kappa * hp.T);
  EXPECT_NEAR(exact, 0.018983, 1e-6);
  EXPECT_LE(std::abs(est.mean - exact), 4.0 * est.se);
}

TEST(CirTerminal, CentralCaseMean) {
  HestonParams hp = heston_set(0.3);
  hp.x = 0.0;
  const std::size_t n = 200000;
  std::vector<double> x(n);
  for (std::size_t l = 0; l < n; ++l) {
    Rng rng(44, l);
    x[l] = sample_cir_terminal(hp, rng);
  }
  const auto est = mean_se(x);
  EXPECT_LE(std::abs(est.mean - hp.theta * (1.0 - std::exp(-hp.kappa * hp.T))), 4.0 * est.se);
}

TEST(CirTerminal, MatchesWishartSamplerAtDimensionOne) {
  const HestonParams hp = heston_set(1.0);
  const WishartLaw law = terminal_law(to_wmsv(hp));
  const WishartSampler w(law);
  const std::size_t n = 100000;
  std::vector<double> a(n), b(n);
  for (std::size_t l = 0; l < n; ++l) {
    Rng r1(45, l), r2(46, l);
    a[l] = sample_cir_terminal(hp, r1);
    b[l] = w(r2)(0, 0);
  }
  EXPECT_LT(ks_two_sample(a, b), kKs99 * std::sqrt(2.0 / n));
}

TEST(BkCf, UnitAtZeroAndSymmetry) {
  const HestonParams hp = heston_set(1.0);
  EXPECT_LT(std::abs(bk_integrated_var_cf(0.0, hp, hp.x, 0.02) - 1.0), 1e-13);
  for (double lambda : {0.7, 12.0, 150.0}) {
    for (double xT : {0.001, 0.02, 0.08}) {
      const cd a = bk_integrated_var_cf(lambda, hp, hp.x, xT);
      const cd b = bk_integrated_var_cf(-lambda, hp, hp.x, xT);
      EXPECT_NEAR(a.real(), b.real(), 1e-12);
      EXPECT_NEAR(a.imag(), -b.imag(), 1e-12);
      EXPECT_LE(std::abs(a), 1.0 + 1e-12);
    }
  }
}

TEST(BkCf, ConditionalMeanMatchesBruteForce) {
  // Fine-grid paths with exact CIR transitions and the trapezoidal rule for int X dt,
  // binned on X_T; the CF slope is averaged over the same X_T values.
  const HestonParams hp = heston_set(1.0);
  const int steps = 200;
  const std::size_t paths = 200000;
  HestonParams step = hp;
  step.T = hp.T / steps;
  struct Bin {
    double lo, hi;
    std::vector<double> xT, integral;
  };
  std::vector<Bin> bins = {{0.0095, 0.0105, {}, {}}, {0.028, 0.030, {}, {}}};
  for (std::size_t l = 0; l < paths; ++l) {
    Rng rng(47, l);
    double x = hp.x, acc = 0.0;
    for (int i = 0; i < steps; ++i) {
      step.x = x;
      const double next = sample_cir_terminal(step, rng);
      acc += 0.5 * (x + next) * step.T;
      x = next;
    }
    for (auto& b : bins) {
      if (x >= b.lo && x < b.hi) {
        b.xT.push_back(x);
        b.integral.push_back(acc);
      }
    }
  }
  for (const auto& b : bins) {
    ASSERT_GT(b.xT.size(), 1000u);
    const double brute = mean_se(b.integral).mean;
    double model = 0.0;
    for (double v : b.xT) model += cond_integrated_mean(hp, hp.x, v);
    model /= static_cast<double>(b.xT.size());
    EXPECT_LT(std::abs(model - brute), 0.02 * brute) << "bin [" << b.lo << ", " << b.hi << ")";
  }
}

TEST(BkSample, LogPriceAlgebraWithoutCorrelation) {
  HestonParams hp = heston_set(1.0);
  hp.rho = 0.0;
  for (double I : {0.0, 0.004, 0.03}) {
    for (double Z : {-1.3, 0.0, 2.1}) {
      const double expected = hp.y + hp.r * hp.T - 0.5 * I + std::sqrt(I) * Z;
      EXPECT_NEAR(bk_log_price(hp, 0.017, I, Z), expected, 1e-14);
    }
  }
}

TEST(BkSample, InvertedIntegralHasConditionalMean) {
  const HestonParams hp = heston_set(1.0);
  const BkSampler sampler(hp, 32.0, 200);
  for (double xT : {0.006, 0.025}) {
    std::vector<double> re(sampler.N());
    sampler.cf_real(xT, re);
    const std::size_t n = 40000;
    std::vector<double> I(n);
    for (std::size_t l = 0; l < n; ++l) {
      Rng rng(48, l);
      I[l] = sampler.invert(re, rng.uniform());
    }
    const auto est = mean_se(I);
    EXPECT_LE(std::abs(est.mean - cond_integrated_mean(hp, hp.x, xT)), 4.0 * est.se);
  }
}

TEST(BkSample, PriceAtOneYear) {
  const HestonParams hp = heston_set(1.0);
  const auto y = simulate_bk(hp, 32.0, 25, 50000, 49);
  const McResult mc = mc_call_price(y, hp.r, hp.T, 100.0);
  EXPECT_TRUE(mc.covers(6.8061)) << mc.estimate << " +- " << mc.std_error;
}

TEST(BkSample, DeterministicAcrossWorkers) {
  const HestonParams hp = heston_set(0.25);
  EXPECT_EQ(simulate_bk(hp, 32.0, 25, 500, 50, 1), simulate_bk(hp, 32.0, 25, 500, 50, 3));
  EXPECT_THROW(BkSampler(hp, 0.0, 25), Error);
}

TEST(HestonExact, AgreesWithBroadieKaya) {
  const HestonParams hp = heston_set(1.0);
  const auto exact = simulate(HestonCondCf(hp), 30000, 51);
  const auto bk = simulate_bk(hp, 16.0, 60, 30000, 52);
  const McResult a = mc_call_price(exact.y_T, hp.r, hp.T, 100.0);
  const McResult b = mc_call_price(bk, hp.r, hp.T, 100.0);
  EXPECT_LE(std::abs(a.estimate - b.estimate), 3.0 * std::hypot(a.std_error, b.std_error));
  EXPECT_TRUE(a.covers(6.8061)) << a.estimate << " +- " << a.std_error;
}
