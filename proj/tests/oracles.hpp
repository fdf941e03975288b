#pragma once

// Slow reference solvers used to check the fast ones.

#include <algorithm>
#include <cmath>
#include <vector>

#include "satspline/satspline.hpp"

namespace satspline::testing {

// Euclidean projection onto {w : per-group sum 0, ||w||_1 <= tau}. For a fixed l1
// multiplier lambda the solution is soft(v - nu_g, lambda) with nu_g found by
// bisection; lambda itself is found by bisection on the l1 budget.
inline std::vector<double> project(const std::vector<double>& v, const std::vector<std::size_t>& groups, double tau) {
  const std::size_t G = *std::max_element(groups.begin(), groups.end()) + 1;
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  auto soft = [](double a, double l) { return a > l ? a - l : (a < -l ? a + l : 0.0); };
  auto solve = [&](double lambda) {
    std::vector<double> w(v.size());
    for (std::size_t g = 0; g < G; ++g) {
      double lo = -vmax - lambda, hi = vmax + lambda;
      for (int it = 0; it < 80; ++it) {
        const double nu = 0.5 * (lo + hi);
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
          if (groups[i] == g) s += soft(v[i] - nu, lambda);
        (s > 0.0 ? lo : hi) = nu;
      }
      const double nu = 0.5 * (lo + hi);
      for (std::size_t i = 0; i < v.size(); ++i)
        if (groups[i] == g) w[i] = soft(v[i] - nu, lambda);
    }
    return w;
  };
  auto l1 = [](const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += std::abs(x);
    return s;
  };
  std::vector<double> w = solve(0.0);
  if (l1(w) <= tau) return w;
  double lo = 0.0, hi = 2.0 * vmax;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (l1(solve(mid)) > tau ? lo : hi) = mid;
  }
  return solve(hi);
}

struct Problem {
  std::vector<std::vector<double>> columns;
  std::vector<std::size_t> groups;
  std::vector<double> y;
  LossSpec loss;
  double tau;
};

inline double objective_at(const Problem& p, const std::vector<double>& w, double c) {
  std::vector<double> z(p.y.size(), c);
  for (std::size_t j = 0; j < w.size(); ++j)
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += w[j] * p.columns[j][i];
  return objective(p.loss, z, p.y);
}

// Accelerated projected gradient with restart, run long.
inline double brute_force(const Problem& p) {
  const std::size_t k = p.columns.size(), n = p.y.size();
  double L = static_cast<double>(n);
  for (const auto& c : p.columns)
    for (double v : c) L += v * v;
  if (p.loss.kind == LossKind::Logistic) L *= 0.25;
  std::vector<double> w(k, 0.0), wv = w, wprev = w;
  double c = best_constant(p.loss, p.y), cv = c, cprev = c, mom = 1.0;
  double best = objective_at(p, w, c), last = best;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> z(n, cv);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < n; ++i) z[i] += wv[j] * p.columns[j][i];
    auto [f, g] = objective_and_gradient(p.loss, z, p.y);
    std::vector<double> step(k);
    double gc = 0.0;
    for (double gi : g) gc += gi;
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += g[i] * p.columns[j][i];
      step[j] = wv[j] - s / L;
    }
    wprev = w;
    cprev = c;
    w = project(step, p.groups, p.tau);
    c = cv - gc / L;
    const double now = objective_at(p, w, c);
    best = std::min(best, now);
    double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
    if (now > last) next = 1.0;
    const double beta = now > last ? 0.0 : (mom - 1.0) / next;
    for (std::size_t j = 0; j < k; ++j) wv[j] = w[j] + beta * (w[j] - wprev[j]);
    cv = c + beta * (c - cprev);
    mom = next;
    last = now;
  }
  return best;
}

}  // namespace satspline::testing
