#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "satspline/dataset.hpp"
#include "satspline/error.hpp"
#include "satspline/measure.hpp"

namespace satspline {

// Optional instrumentation: counts elementary steps inside an LMO.
struct OpCounter {
  std::size_t ops = 0;
};

// Linear minimization result over {mass-zero measures with l1 <= tau} on one feature:
//   s* = (tau/2) delta_{t_plus} - (tau/2) delta_{t_minus}, or zero when spread >= 0.
struct ConditionalGradient {
  std::size_t feature = 0;
  double t_plus = 0.0;
  double t_minus = 0.0;
  double value_plus = 0.0;   // min_t <g, psi(t)>
  double value_minus = 0.0;  // min_t -<g, psi(t)>
  double spread = 0.0;       // value_plus + value_minus
  double tau = 0.0;
  bool zero = true;

  // Objective of the proposed direction: <g, E_x s*>.
  double objective() const { return zero ? 0.0 : 0.5 * tau * spread; }

  AtomicMeasure direction() const {
    if (zero) return {};
    return AtomicMeasure({{t_plus, 0.5 * tau}, {t_minus, -0.5 * tau}});
  }
};

struct GapCertificate {
  double gap = 0.0;
};

// Answers sum_i g_i (x_i - t)_+ in O(log n) after an O(n) suffix-sum pass.
class HingeCorrelator {
 public:
  HingeCorrelator(std::span<const double> g, std::span<const double> x_sorted)
      : x_(x_sorted.begin(), x_sorted.end()), s0_(x_sorted.size() + 1, 0.0), s1_(x_sorted.size() + 1, 0.0) {
    require(g.size() == x_sorted.size(), "gradient/data length mismatch");
    for (std::size_t i = x_.size(); i-- > 0;) {
      s0_[i] = s0_[i + 1] + g[i];
      s1_[i] = s1_[i + 1] + g[i] * x_[i];
    }
  }

  double operator()(double t) const {
    const std::size_t j = static_cast<std::size_t>(std::lower_bound(x_.begin(), x_.end(), t) - x_.begin());
    return s1_[j] - t * s0_[j];
  }

 private:
  std::vector<double> x_;
  std::vector<double> s0_, s1_;
};

inline double hinge_correlation(std::span<const double> g, std::span<const double> x_sorted, double t) {
  return HingeCorrelator(g, x_sorted)(t);
}

namespace detail {

inline void check_lmo_inputs(std::span<const double> g, std::span<const double> x_sorted, double tau) {
  require(!x_sorted.empty(), "LMO on empty data");
  require(g.size() == x_sorted.size(), "gradient/data length mismatch");
  require(tau >= 0.0, "tau must be non-negative");
  require(x_sorted.front() >= 0.0 && x_sorted.back() <= 1.0, "LMO data must lie in [0,1]");
  require(std::is_sorted(x_sorted.begin(), x_sorted.end()), "LMO data must be sorted ascending");
}

// Tracks argmin of value (ties -> first seen, so callers feed ascending t) for
// both <g,psi> and -<g,psi>.
struct MinTracker {
  double best_plus = std::numeric_limits<double>::infinity();
  double best_minus = std::numeric_limits<double>::infinity();
  double t_plus = 0.0;
  double t_minus = 0.0;

  void offer(double t, double value) {
    if (value < best_plus) {
      best_plus = value;
      t_plus = t;
    }
    if (-value < best_minus) {
      best_minus = -value;
      t_minus = t;
    }
  }
};

inline ConditionalGradient finish(const MinTracker& m, double tau, std::size_t feature) {
  ConditionalGradient cg;
  cg.feature = feature;
  cg.tau = tau;
  cg.value_plus = m.best_plus;
  cg.value_minus = m.best_minus;
  cg.spread = m.best_plus + m.best_minus;
  cg.t_plus = m.t_plus;
  cg.t_minus = m.t_minus;
  cg.zero = !(cg.spread < 0.0) || tau == 0.0;
  return cg;
}

}  // namespace detail

// Exact LMO for degree-one hinges. <g, psi(t)> is piecewise linear in t with
// breakpoints at the data, so the candidates {0} U {x_i} contain both minimizers.
inline ConditionalGradient lmo_univariate(std::span<const double> g, std::span<const double> x_sorted, double tau,
                                          OpCounter* counter = nullptr, std::size_t feature = 0) {
  detail::check_lmo_inputs(g, x_sorted, tau);
  const std::size_t n = x_sorted.size();
  std::vector<double> s0(n + 1, 0.0), s1(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    s0[i] = s0[i + 1] + g[i];
    s1[i] = s1[i + 1] + g[i] * x_sorted[i];
  }
  detail::MinTracker m;
  m.offer(0.0, s1[0]);
  for (std::size_t i = 0; i < n; ++i) m.offer(x_sorted[i], s1[i] - x_sorted[i] * s0[i]);
  if (counter) counter->ops += 2 * n + 1;
  return detail::finish(m, tau, feature);
}

// Exact LMO for squared hinges (x - t)_+^2. On each gap between consecutive data
// points the objective is S2 - 2 t S1 + t^2 S0 over the suffix set; its extremes
// lie at the gap endpoints or at the vertex S1 / S0.
inline ConditionalGradient lmo_degree2(std::span<const double> g, std::span<const double> x_sorted, double tau,
                                       OpCounter* counter = nullptr, std::size_t feature = 0) {
  detail::check_lmo_inputs(g, x_sorted, tau);
  const std::size_t n = x_sorted.size();
  std::vector<double> s0(n + 1, 0.0), s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double x = x_sorted[i];
    s0[i] = s0[i + 1] + g[i];
    s1[i] = s1[i + 1] + g[i] * x;
    s2[i] = s2[i + 1] + g[i] * x * x;
  }
  detail::MinTracker m;
  double left = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double right = x_sorted[j];
    if (right < left) continue;
    auto q = [&](double t) { return s2[j] - 2.0 * t * s1[j] + t * t * s0[j]; };
    m.offer(left, q(left));
    if (s0[j] != 0.0) {
      const double vertex = s1[j] / s0[j];
      if (vertex > left && vertex < right) m.offer(vertex, q(vertex));
    }
    m.offer(right, q(right));
    left = right;
    if (counter) counter->ops += 3;
  }
  // Beyond the largest data point every squared hinge vanishes.
  if (left < 1.0) m.offer(left, 0.0);
  if (counter) counter->ops += 3 * n;
  return detail::finish(m, tau, feature);
}

// One feature's scaled column in ascending order, with the permutation back to rows.
struct SortedFeature {
  std::vector<std::size_t> order;
  std::vector<double> x;
  bool constant = false;
};

inline std::vector<SortedFeature> sort_features(const Matrix& X_scaled) {
  std::vector<SortedFeature> out(X_scaled.cols());
  for (std::size_t d = 0; d < X_scaled.cols(); ++d) {
    auto col = X_scaled.col(d);
    auto& f = out[d];
    f.order.resize(col.size());
    std::iota(f.order.begin(), f.order.end(), std::size_t{0});
    std::stable_sort(f.order.begin(), f.order.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    f.x.resize(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) f.x[i] = col[f.order[i]];
    f.constant = f.x.empty() || f.x.front() == f.x.back();
  }
  return out;
}

// Per-feature LMO; picks the most negative spread, ties to the smallest feature index.
// Constant columns cannot carry a useful knot and are skipped.
inline ConditionalGradient lmo_gam(std::span<const double> g, std::span<const SortedFeature> features, double tau,
                                   int degree = 1, OpCounter* counter = nullptr) {
  require(!features.empty(), "LMO with no features");
  ConditionalGradient best;
  best.tau = tau;
  std::vector<double> gp;
  for (std::size_t d = 0; d < features.size(); ++d) {
    const SortedFeature& f = features[d];
    require(f.x.size() == g.size(), "gradient/data length mismatch");
    if (f.constant) continue;
    gp.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gp[i] = g[f.order[i]];
    ConditionalGradient cg =
        degree == 2 ? lmo_degree2(gp, f.x, tau, counter, d) : lmo_univariate(gp, f.x, tau, counter, d);
    if (cg.spread < best.spread) best = cg;
  }
  best.zero = !(best.spread < 0.0) || tau == 0.0;
  return best;
}

// Frank-Wolfe gap -<g, E_x s* - E_x mu>: an upper bound on suboptimality.
inline GapCertificate duality_gap(std::span<const double> g, std::span<const double> mu_fit_values,
                                  std::span<const double> s_fit_values) {
  require(g.size() == mu_fit_values.size() && g.size() == s_fit_values.size(), "gap inputs length mismatch");
  double gap = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) gap += g[i] * (mu_fit_values[i] - s_fit_values[i]);
  return {gap};
}

// E_x s* for a conditional gradient, evaluated on (scaled) feature values.
inline std::vector<double> direction_values(const ConditionalGradient& cg, std::span<const double> x_feature,
                                            int degree = 1) {
  std::vector<double> v(x_feature.size(), 0.0);
  if (cg.zero) return v;
  const double h = 0.5 * cg.tau;
  for (std::size_t i = 0; i < x_feature.size(); ++i)
    v[i] = h * hinge(x_feature[i], cg.t_plus, degree) - h * hinge(x_feature[i], cg.t_minus, degree);
  return v;
}

}  // namespace satspline
