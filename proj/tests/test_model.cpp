#include <gtest/gtest.h>

#include <vector>

#include "support.hpp"

using namespace satspline;

namespace {

GamModel two_feature_model() {
  GamModel m;
  m.per_feature = {AtomicMeasure({{0.5, 1.0}, {1.0, -1.0}}), AtomicMeasure{}};
  m.scaling = identity_scaling(2);
  m.tau = 2.0;
  return m;
}

}  // namespace

TEST(Scaling, MapsTrainingRangeToUnitInterval) {
  Matrix X = Matrix::from_columns({{2.0, 4.0, 6.0}});
  auto maps = fit_scaling(X);
  Matrix S = apply_scaling(maps, X);
  EXPECT_DOUBLE_EQ(S(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(S(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(S(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(maps[0].apply(8.0), 1.5);
  EXPECT_DOUBLE_EQ(maps[0].invert(0.5), 4.0);
}

TEST(Scaling, ConstantColumnMapsToHalf) {
  auto maps = fit_scaling(Matrix::from_columns({{5.0, 5.0}}));
  EXPECT_DOUBLE_EQ(maps[0].apply(5.0), 0.5);
  EXPECT_DOUBLE_EQ(maps[0].apply(-100.0), 0.5);
}

TEST(Gam, EmptyMeasuresGiveOffset) {
  GamModel m;
  m.offset = 2.0;
  m.per_feature.assign(3, AtomicMeasure{});
  m.scaling = identity_scaling(3);
  const std::vector<double> x{0.1, 5.0, -2.0};
  EXPECT_DOUBLE_EQ(eval_gam(m, x), 2.0);
}

TEST(Gam, InactiveFeatureContributesNothing) {
  const std::vector<double> x{0.75, 9.9};
  EXPECT_DOUBLE_EQ(eval_gam(two_feature_model(), x), 0.25);
}

TEST(Gam, SaturatesBeyondUnitBox) {
  GamModel m = two_feature_model();
  m.per_feature[1] = AtomicMeasure({{0.1, -0.3}, {0.4, 0.3}});
  const std::vector<double> at_one{1.0, 1.0}, beyond{3.0, 1.7};
  EXPECT_NEAR(eval_gam_scaled(m, beyond), eval_gam_scaled(m, at_one), 1e-12);
}

TEST(Gam, DimensionMismatch) {
  const std::vector<double> x{0.5};
  EXPECT_THROW(eval_gam(two_feature_model(), x), InvalidInput);
}

TEST(Gam, Constraints) {
  GamModel m = two_feature_model();
  EXPECT_TRUE(satisfies_constraints(m));
  m.tau = 1.5;
  EXPECT_FALSE(satisfies_constraints(m));
  m.tau = 3.0;
  m.per_feature[1] = AtomicMeasure({{0.2, 0.5}});
  EXPECT_FALSE(satisfies_constraints(m));
}

TEST(Gam, RawScalingRoundTrip) {
  GamModel m = two_feature_model();
  Matrix raw = Matrix::from_columns({{10.0, 15.0, 20.0, 25.0}, {1.0, 2.0, 3.0, 4.0}});
  m.scaling = fit_scaling(raw);
  const std::vector<double> a = predict(m, raw);
  const std::vector<double> b = predict_scaled(m, apply_scaling(m.scaling, raw));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(a[i], b[i]);
}

TEST(Dataset, SubsetAndValidation) {
  Dataset ds;
  ds.X = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  ds.y = {1, 2, 3};
  const std::vector<std::size_t> idx{2, 0};
  Dataset s = ds.subset(idx);
  EXPECT_EQ(s.n(), 2u);
  EXPECT_EQ(s.X(0, 1), 6.0);
  EXPECT_EQ(s.y[1], 1.0);
  ds.y.pop_back();
  EXPECT_THROW(ds.validate(), InvalidInput);
}
