#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace satspline;

TEST(Measure, SingleHinge) {
  AtomicMeasure m({{0.5, 1.0}});
  EXPECT_DOUBLE_EQ(eval_spline(m, 0.0, 0.75), 0.25);
  EXPECT_DOUBLE_EQ(eval_spline(m, 0.0, 0.25), 0.0);
}

TEST(Measure, MassZeroSaturates) {
  AtomicMeasure m({{0.2, 1.0}, {0.6, -1.0}});
  EXPECT_NEAR(eval_spline(m, 0.0, 1.5), 0.4, 1e-15);
  EXPECT_NEAR(eval_spline(m, 0.0, 2.5), 0.4, 1e-15);
  EXPECT_NEAR(m.total_mass(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(m.l1_norm(), 2.0);
}

TEST(Measure, EmptyIsConstant) {
  AtomicMeasure m;
  for (double x : {-3.0, 0.0, 0.4, 1.0, 7.0}) EXPECT_DOUBLE_EQ(eval_spline(m, 3.7, x), 3.7);
}

TEST(Measure, Degree2Hinge) {
  AtomicMeasure m({{0.5, 1.0}});
  EXPECT_DOUBLE_EQ(eval_spline(m, 1.0, 1.0, 2), 1.25);
}

TEST(Measure, RejectsBadAtoms) {
  EXPECT_THROW(AtomicMeasure({{1.2, 1.0}}), InvalidInput);
  EXPECT_THROW(AtomicMeasure({{-0.1, 1.0}}), InvalidInput);
  EXPECT_THROW(AtomicMeasure({{0.5, std::nan("")}}), InvalidInput);
}

TEST(Measure, SortsAndMergesDuplicates) {
  AtomicMeasure m({{0.7, 1.0}, {0.3, 0.5}, {0.7, -0.25}});
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.atoms()[0].t, 0.3);
  EXPECT_EQ(m.atoms()[1].t, 0.7);
  EXPECT_DOUBLE_EQ(m.atoms()[1].w, 0.75);
}

TEST(Measure, Combine) {
  AtomicMeasure a({{0.2, 1.0}, {0.6, -1.0}});
  AtomicMeasure b({{0.6, 1.0}, {0.9, -1.0}});
  AtomicMeasure c = a.combine(0.5, b, 0.5);
  for (double x : {0.0, 0.3, 0.7, 1.0, 1.4})
    EXPECT_NEAR(c.integrate(x), 0.5 * a.integrate(x) + 0.5 * b.integrate(x), 1e-15);
}

TEST(Prune, DropsTinyAtoms) {
  AtomicMeasure m({{0.3, 1e-14}, {0.7, 0.5}});
  AtomicMeasure p = prune(m, 1e-10);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.atoms()[0].t, 0.7);
  EXPECT_NEAR(p.atoms()[0].w, 0.5, 1e-13);
}

TEST(Prune, CancellingDuplicatesVanish) {
  AtomicMeasure p = prune(AtomicMeasure({{0.3, 0.2}, {0.3, -0.2}}));
  EXPECT_TRUE(p.empty());
}

TEST(Prune, PreservesValuesAndMass) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double threshold = 1e-10;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Atom> atoms;
    double sum = 0.0;
    for (int j = 0; j < 8; ++j) {
      const double w = (j % 3 == 0) ? 1e-12 * (u(rng) - 0.5) : u(rng) - 0.5;
      atoms.push_back({u(rng), w});
      sum += w;
    }
    atoms.push_back({u(rng), -sum});
    AtomicMeasure m(atoms);
    AtomicMeasure p = prune(m, threshold);
    EXPECT_NEAR(p.total_mass(), m.total_mass(), 1e-15);
    EXPECT_LE(p.l1_norm(), m.l1_norm() + 1e-15);
    const std::vector<double> xs = satspline::testing::uniform(rng, 20);
    for (double x : xs) EXPECT_NEAR(eval_spline(p, 0.0, x), eval_spline(m, 0.0, x), 20 * threshold);
  }
}

TEST(Saturation, RandomMassZeroSplines) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Atom> atoms;
    double sum = 0.0;
    for (int j = 0; j < 5; ++j) {
      atoms.push_back({u(rng), u(rng) - 0.5});
      sum += atoms.back().w;
    }
    atoms.push_back({u(rng), -sum});
    AtomicMeasure m(atoms);
    EXPECT_NEAR(eval_spline(m, 0.3, 1.5), eval_spline(m, 0.3, 1.0), 1e-9);
    EXPECT_NEAR(eval_spline(m, 0.3, -0.5), eval_spline(m, 0.3, 0.0), 1e-9);
  }
}
