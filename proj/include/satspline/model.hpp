#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satspline/dataset.hpp"
#include "satspline/error.hpp"
#include "satspline/loss.hpp"
#include "satspline/measure.hpp"

namespace satspline {

// x -> (x - min) / (max - min); a constant column (max == min) maps to 0.5.
struct AffineScaling {
  double min = 0.0;
  double max = 1.0;

  bool degenerate() const { return !(max > min); }

  double apply(double x) const {
    if (degenerate()) return 0.5;
    return (x - min) / (max - min);
  }
  double invert(double s) const {
    if (degenerate()) return min;
    return min + s * (max - min);
  }

  friend bool operator==(const AffineScaling&, const AffineScaling&) = default;
};

inline std::vector<AffineScaling> fit_scaling(const Matrix& X_train) {
  require(X_train.rows() >= 1 && X_train.cols() >= 1, "cannot fit scaling on an empty dataset");
  std::vector<AffineScaling> maps(X_train.cols());
  for (std::size_t d = 0; d < X_train.cols(); ++d) {
    auto c = X_train.col(d);
    auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    maps[d] = {*lo, *hi};
  }
  return maps;
}

inline Matrix apply_scaling(std::span<const AffineScaling> maps, const Matrix& X) {
  require(maps.size() == X.cols(), "scaling dimension does not match data");
  Matrix out(X.rows(), X.cols());
  for (std::size_t d = 0; d < X.cols(); ++d) {
    auto src = X.col(d);
    auto dst = out.col(d);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = maps[d].apply(src[i]);
  }
  return out;
}

inline std::vector<AffineScaling> identity_scaling(std::size_t dim) {
  return std::vector<AffineScaling>(dim, AffineScaling{0.0, 1.0});
}

// Univariate saturating spline on pre-scaled inputs.
struct SplineModel {
  double offset = 0.0;
  AtomicMeasure measure;
  int degree = 1;
  double tau = 0.0;
  LossSpec loss;

  double operator()(double x) const { return eval_spline(measure, offset, x, degree); }

  friend bool operator==(const SplineModel&, const SplineModel&) = default;
};

// Additive model: offset + sum_d f_d(scale_d(x[d])), one measure per feature.
struct GamModel {
  double offset = 0.0;
  std::vector<AtomicMeasure> per_feature;
  std::vector<AffineScaling> scaling;
  std::vector<std::string> names;  // empty, or one per feature
  int degree = 1;
  double tau = 0.0;
  LossSpec loss;

  std::size_t dim() const { return per_feature.size(); }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& m : per_feature) s += m.l1_norm();
    return s;
  }

  std::size_t atom_count() const {
    std::size_t k = 0;
    for (const auto& m : per_feature) k += m.size();
    return k;
  }

  std::size_t selected_features() const {
    std::size_t k = 0;
    for (const auto& m : per_feature) k += m.empty() ? 0 : 1;
    return k;
  }

  // Coordinate function f_d evaluated at an already-scaled value.
  double coordinate(std::size_t d, double x_scaled) const {
    return per_feature[d].integrate(x_scaled, degree);
  }

  friend bool operator==(const GamModel&, const GamModel&) = default;
};

inline double eval_gam_scaled(const GamModel& model, std::span<const double> x_scaled) {
  require(x_scaled.size() == model.dim(), "input has " + std::to_string(x_scaled.size()) +
                                              " features, model expects " + std::to_string(model.dim()));
  double f = model.offset;
  for (std::size_t d = 0; d < model.dim(); ++d) f += model.coordinate(d, x_scaled[d]);
  return f;
}

// Applies the stored scaling; raw values outside the training range rely on saturation.
inline double eval_gam(const GamModel& model, std::span<const double> x_raw) {
  require(x_raw.size() == model.dim(), "input has " + std::to_string(x_raw.size()) +
                                           " features, model expects " + std::to_string(model.dim()));
  require(model.scaling.size() == model.dim(), "model scaling does not match its features");
  double f = model.offset;
  for (std::size_t d = 0; d < model.dim(); ++d) f += model.coordinate(d, model.scaling[d].apply(x_raw[d]));
  return f;
}

inline std::vector<double> predict(const GamModel& model, const Matrix& X_raw) {
  std::vector<double> out(X_raw.rows());
  for (std::size_t i = 0; i < X_raw.rows(); ++i) out[i] = eval_gam(model, X_raw.row(i));
  return out;
}

inline std::vector<double> predict_scaled(const GamModel& model, const Matrix& X_scaled) {
  std::vector<double> out(X_scaled.rows());
  for (std::size_t i = 0; i < X_scaled.rows(); ++i) out[i] = eval_gam_scaled(model, X_scaled.row(i));
  return out;
}

inline SplineModel to_spline(const GamModel& model) {
  require(model.dim() == 1, "spline model needs exactly one feature");
  return {model.offset, model.per_feature.front(), model.degree, model.tau, model.loss};
}

inline GamModel to_gam(const SplineModel& model) {
  GamModel g;
  g.offset = model.offset;
  g.per_feature = {model.measure};
  g.scaling = identity_scaling(1);
  g.degree = model.degree;
  g.tau = model.tau;
  g.loss = model.loss;
  return g;
}

// Mass-zero per feature and the global l1 budget.
inline bool satisfies_constraints(const GamModel& model, double tol = kMassTolerance) {
  for (const auto& m : model.per_feature)
    if (std::abs(m.total_mass()) > tol) return false;
  return model.l1_norm() <= model.tau + tol;
}

}  // namespace satspline
