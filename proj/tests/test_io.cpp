#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace satspline;

namespace {

GamModel random_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GamModel m;
  m.offset = u(rng) - 0.5;
  m.degree = 1;
  m.loss = LossSpec::pseudo_huber(0.02);
  for (int d = 0; d < 3; ++d) {
    std::vector<Atom> atoms;
    double sum = 0.0;
    for (int j = 0; j < 3 * d; ++j) {
      atoms.push_back({u(rng), u(rng) - 0.5});
      sum += atoms.back().w;
    }
    if (!atoms.empty()) atoms.push_back({u(rng), -sum});
    m.per_feature.emplace_back(atoms);
    m.scaling.push_back({-u(rng), 1.0 + u(rng)});
    m.names.push_back("f" + std::to_string(d));
  }
  m.tau = m.l1_norm() * 1.5;
  return m;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

TEST(ModelJson, RoundTrip) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GamModel m = random_model(seed);
    const std::string text = io::serialize_model(m);
    const GamModel back = io::deserialize_model(text);
    EXPECT_EQ(back, m);
    EXPECT_EQ(io::serialize_model(back), text);
  }
}

TEST(ModelJson, SplineRoundTrip) {
  SplineModel s{0.25, AtomicMeasure({{0.1, 0.5}, {0.9, -0.5}}), 2, 1.0, LossSpec::square()};
  EXPECT_EQ(io::deserialize_spline(io::serialize_model(s)), s);
}

TEST(ModelJson, Rejections) {
  GamModel m;
  m.per_feature = {AtomicMeasure({{0.5, 0.25}, {0.75, -0.25}})};
  m.scaling = identity_scaling(1);
  m.tau = 1.0;
  const std::string good = io::serialize_model(m);
  EXPECT_NO_THROW(io::deserialize_model(good));
  EXPECT_THROW(io::deserialize_model(replace(good, "\"tau\":1", "\"tau\":-1")), InvalidInput);
  EXPECT_THROW(io::deserialize_model(replace(good, "\"t\":0.75", "\"t\":1.2")), InvalidInput);
  EXPECT_THROW(io::deserialize_model(replace(good, "\"w\":-0.25", "\"w\":-0.5")), InvalidInput);
  EXPECT_THROW(io::deserialize_model("{not json"), InvalidInput);
  EXPECT_THROW(io::deserialize_model(replace(good, "\"format_version\":1", "\"format_version\":9")), InvalidInput);
}

TEST(Csv, Ingest) {
  const Dataset ds = io::ingest_csv_text("a,b,y\n1,2,3\n4,5,6\n7,8,9\n", "y");
  EXPECT_EQ(ds.n(), 3u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(ds.names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.y, (std::vector<double>{3, 6, 9}));
  EXPECT_EQ(ds.X(2, 1), 8.0);
}

TEST(Csv, Errors) {
  try {
    io::ingest_csv_text("a,b,y\n1,2,3\n4,NA,6\n", "y");
    FAIL() << "expected rejection";
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  }
  EXPECT_THROW(io::ingest_csv_text("a,b,y\n1,2,3\n", "z"), InvalidInput);
  EXPECT_THROW(io::ingest_csv_text("", "y"), InvalidInput);
  EXPECT_THROW(io::ingest_csv_text("a,y\n", "y"), InvalidInput);
}

TEST(Csv, LogisticLabels) {
  const Dataset ok = io::ingest_csv_text("a,y\n0.1,1\n0.2,-1\n", "y");
  EXPECT_NO_THROW(validate_labels(LossSpec::logistic(), ok.y));
  const Dataset bad = io::ingest_csv_text("a,y\n0.1,1\n0.2,0\n", "y");
  EXPECT_THROW(validate_labels(LossSpec::logistic(), bad.y), InvalidInput);
}

TEST(Output, PredictionsAndFormat) {
  const std::vector<double> p{0.1, -2.0};
  EXPECT_EQ(io::predictions_csv(p), "row_index,prediction\n0,0.10000000000000001\n1,-2\n");
}

TEST(ModelJson, FitThenPredictRoundTrip) {
  const Dataset ds = satspline::testing::synthetic_gam(5, 150, 3, 0.1);
  FitConfig cfg;
  cfg.tau = 12.0;
  const FitResult<GamModel> r = fit_gam(ds, LossSpec::square(), cfg);
  const std::vector<double> direct = predict(r.model, ds.X);
  const GamModel back = io::deserialize_model(io::serialize_model(r.model));
  const std::vector<double> loaded = predict(back, ds.X);
  for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(loaded[i], direct[i], 1e-10);
}
