#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "satspline/satspline.hpp"

namespace satspline::testing {

// Returns an empty string when the model is feasible and saturates, else a description.
// Degree-two models saturate to a line, so only feasibility is checked for them.
inline std::string invariant_violation(const GamModel& m, double tol = 1e-9) {
  for (std::size_t d = 0; d < m.dim(); ++d) {
    const double mass = m.per_feature[d].total_mass();
    if (std::abs(mass) > tol) return "feature " + std::to_string(d) + " mass " + std::to_string(mass);
    if (m.degree != 1) continue;
    const double right = std::abs(m.coordinate(d, 1.5) - m.coordinate(d, 1.0));
    const double left = std::abs(m.coordinate(d, -0.5) - m.coordinate(d, 0.0));
    if (right > tol || left > tol) return "feature " + std::to_string(d) + " does not saturate";
  }
  if (m.l1_norm() > m.tau + tol) return "l1 " + std::to_string(m.l1_norm()) + " exceeds tau " + std::to_string(m.tau);
  return {};
}

inline std::string invariant_violation(const SplineModel& m, double tol = 1e-9) {
  return invariant_violation(to_gam(m), tol);
}

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

// Smooth saturating bump used as the signal in synthetic problems.
inline double signal(double x) { return std::sin(2.0 * std::numbers::pi * std::clamp(x, 0.0, 1.0)); }

// n x D uniform features; y depends on feature 0 only.
inline Dataset synthetic_gam(std::uint64_t seed, std::size_t n, std::size_t D, double sigma) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> cols;
  for (std::size_t d = 0; d < D; ++d) cols.push_back(uniform(rng, n));
  const std::vector<double> noise = gaussian(rng, n, sigma);
  Dataset ds;
  ds.X = Matrix::from_columns(cols);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.y[i] = signal(cols[0][i]) + noise[i];
  for (std::size_t d = 0; d < D; ++d) ds.names.push_back("x" + std::to_string(d));
  return ds;
}

inline double mse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace satspline::testing
