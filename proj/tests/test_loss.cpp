#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace satspline;

TEST(Loss, Values) {
  EXPECT_DOUBLE_EQ(loss_value(LossSpec::square(), 3.0, 1.0), 2.0);
  EXPECT_NEAR(loss_value(LossSpec::logistic(), 0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_value(LossSpec::logistic(), 0.0, -1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_value(LossSpec::pseudo_huber(1.0), 2.0, 1.0), std::sqrt(2.0) - 1.0, 1e-15);
  EXPECT_EQ(LossSpec::pseudo_huber().delta, 0.0015);
}

TEST(Loss, Derivatives) {
  EXPECT_DOUBLE_EQ(loss_grad(LossSpec::square(), 3.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(loss_hess(LossSpec::square(), 3.0, 1.0), 1.0);
  EXPECT_NEAR(loss_grad(LossSpec::logistic(), 0.0, 1.0), -0.5, 1e-15);
  EXPECT_NEAR(loss_hess(LossSpec::logistic(), 0.0, -1.0), 0.25, 1e-15);
}

TEST(Loss, LogisticIsStableForLargeMargins) {
  const LossSpec l = LossSpec::logistic();
  EXPECT_NEAR(loss_value(l, 800.0, 1.0), 0.0, 1e-300);
  EXPECT_NEAR(loss_value(l, -800.0, 1.0), 800.0, 1e-9);
  EXPECT_TRUE(std::isfinite(loss_grad(l, -800.0, 1.0)));
}

TEST(Loss, LabelDomain) {
  EXPECT_THROW(loss_value(LossSpec::logistic(), 0.0, 0.0), InvalidInput);
  const std::vector<double> y{0.0, 1.0, 1.0};
  try {
    validate_labels(LossSpec::logistic(), y);
    FAIL() << "expected rejection";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("2y - 1"), std::string::npos);
  }
}

TEST(Loss, FiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> z(-3.0, 3.0), yr(-2.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (const LossSpec& spec : {LossSpec::square(), LossSpec::logistic(), LossSpec::pseudo_huber(),
                               LossSpec::pseudo_huber(0.5)}) {
    for (int i = 0; i < 1000; ++i) {
      const double zi = z(rng);
      const double yi = spec.kind == LossKind::Logistic ? (coin(rng) ? 1.0 : -1.0) : yr(rng);
      const double h = 1e-5 * std::max(1.0, std::abs(zi));
      const double fd = (loss_value(spec, zi + h, yi) - loss_value(spec, zi - h, yi)) / (2 * h);
      const double g = loss_grad(spec, zi, yi);
      EXPECT_LE(std::abs(fd - g), 1e-6 * std::max(1.0, std::abs(g))) << loss_name(spec.kind) << " z=" << zi;
      const double fd2 = (loss_grad(spec, zi + h, yi) - loss_grad(spec, zi - h, yi)) / (2 * h);
      const double hs = loss_hess(spec, zi, yi);
      EXPECT_LE(std::abs(fd2 - hs), 1e-5 * std::max(1.0, std::abs(hs))) << loss_name(spec.kind) << " z=" << zi;
    }
  }
}

TEST(Loss, Convexity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> z(-5.0, 5.0), lam(0.0, 1.0);
  for (const LossSpec& spec : {LossSpec::square(), LossSpec::logistic(), LossSpec::pseudo_huber()}) {
    for (int i = 0; i < 500; ++i) {
      const double a = z(rng), b = z(rng), l = lam(rng), y = spec.kind == LossKind::Logistic ? 1.0 : 0.3;
      const double gap = l * loss_value(spec, a, y) + (1 - l) * loss_value(spec, b, y) -
                         loss_value(spec, l * a + (1 - l) * b, y);
      EXPECT_GE(gap, -1e-12);
    }
  }
}

TEST(Objective, Examples) {
  const std::vector<double> y{0.0, 2.0}, fitted{1.0, 1.0};
  auto [f, g] = objective_and_gradient(LossSpec::square(), fitted, y);
  EXPECT_DOUBLE_EQ(f, 1.0);
  EXPECT_EQ(g, (std::vector<double>{1.0, -1.0}));
  auto [f0, g0] = objective_and_gradient(LossSpec::square(), y, y);
  EXPECT_EQ(f0, 0.0);
  EXPECT_EQ(g0, (std::vector<double>{0.0, 0.0}));
}

TEST(Objective, MatchesPointwiseSums) {
  std::mt19937_64 rng(9);
  const std::vector<double> z = satspline::testing::gaussian(rng, 200);
  const std::vector<double> y = satspline::testing::gaussian(rng, 200);
  const LossSpec spec = LossSpec::pseudo_huber(0.1);
  auto [f, g] = objective_and_gradient(spec, z, y);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    s += loss_value(spec, z[i], y[i]);
    EXPECT_NEAR(g[i], loss_grad(spec, z[i], y[i]), 1e-12);
  }
  EXPECT_NEAR(f, s, 1e-12 * std::max(1.0, s));
}

TEST(BestConstant, PerLoss) {
  const std::vector<double> y{1.0, 2.0, 3.0};
  EXPECT_DOUBLE_EQ(best_constant(LossSpec::square(), y), 2.0);
  const std::vector<double> labels{1.0, 1.0, 1.0, -1.0};
  EXPECT_NEAR(best_constant(LossSpec::logistic(), labels), std::log(3.0), 1e-12);
  const std::vector<double> r{0.0, 0.1, 0.2, 10.0, 0.15};
  const double c = best_constant(LossSpec::pseudo_huber(), r);
  double g = 0.0;
  for (double v : r) g += loss_grad(LossSpec::pseudo_huber(), c, v);
  EXPECT_NEAR(g, 0.0, 1e-9);
  EXPECT_LT(c, 0.2);
}
