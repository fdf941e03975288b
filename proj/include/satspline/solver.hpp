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
#include "satspline/fully_corrective.hpp"
#include "satspline/loss.hpp"
#include "satspline/measure.hpp"
#include "satspline/model.hpp"
#include "satspline/oracle.hpp"

namespace satspline {

struct FitConfig {
  double tau = 1.0;
  double gap_tol = 1e-6;  // relative to max(1, initial objective)
  int max_outer_iters = 500;
  int newton_iters = 20;
  int inner_cgm_iters = 200;
  double inner_gap_tol = 1e-9;
  double prune_threshold = kDefaultPruneThreshold;
  bool knot_move = false;
  int degree = 1;

  void validate() const {
    require(std::isfinite(tau) && tau >= 0.0, "tau must be a finite non-negative number");
    require(gap_tol > 0.0 && inner_gap_tol > 0.0, "tolerances must be positive");
    require(prune_threshold >= 0.0, "prune threshold must be non-negative");
    require(max_outer_iters >= 0 && newton_iters >= 1 && inner_cgm_iters >= 1, "iteration caps must be positive");
    require(degree == 1 || degree == 2, "degree must be 1 or 2");
  }

  InnerOptions inner() const { return {newton_iters, inner_cgm_iters, inner_gap_tol, 10}; }
};

enum class Termination { GapTol, MaxIters, TauZero };

inline std::string termination_name(Termination t) {
  switch (t) {
    case Termination::GapTol: return "gap_tol";
    case Termination::MaxIters: return "max_iters";
    case Termination::TauZero: return "tau_zero";
  }
  return "gap_tol";
}

struct IterationRecord {
  double objective = 0.0;
  double gap = 0.0;
  std::size_t atom_count = 0;
};

struct FitReport {
  std::vector<IterationRecord> trace;
  Termination termination = Termination::GapTol;
  double final_objective = 0.0;
  double final_gap = 0.0;
  double gap_threshold = 0.0;  // absolute threshold the loop compared against
  int inner_failures = 0;      // fully-corrective solves whose inner loop hit its cap
  int knot_moves = 0;

  bool converged() const { return termination != Termination::MaxIters; }
};

template <class Model>
struct FitResult {
  Model model;
  FitReport report;
};

namespace detail {

// Working state of a fit on scaled data: active knots with cached basis columns.
class ActiveSet {
 public:
  ActiveSet(const Matrix& X_scaled, int degree) : X_(X_scaled), degree_(degree) {}

  std::size_t size() const { return knots_.size(); }
  const std::vector<ActiveKnot>& knots() const { return knots_; }
  const std::vector<std::vector<double>>& columns() const { return columns_; }
  const std::vector<std::size_t>& groups() const { return groups_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Index of the knot, adding it with zero weight when absent.
  std::size_t ensure(ActiveKnot k) {
    for (std::size_t j = 0; j < knots_.size(); ++j)
      if (knots_[j] == k) return j;
    knots_.push_back(k);
    groups_.push_back(k.feature);
    columns_.push_back(knot_column(X_.col(k.feature), k.t, degree_));
    weights_.push_back(0.0);
    return knots_.size() - 1;
  }

  void move(std::size_t j, double t) {
    knots_[j].t = t;
    columns_[j] = knot_column(X_.col(knots_[j].feature), t, degree_);
  }

  bool contains(ActiveKnot k) const { return std::find(knots_.begin(), knots_.end(), k) != knots_.end(); }

  // Drops |w| < threshold, moving the dropped mass of each feature onto that
  // feature's heaviest survivor so the mass-zero constraint is preserved.
  void prune(double threshold) {
    std::vector<bool> keep(knots_.size());
    for (std::size_t j = 0; j < knots_.size(); ++j) keep[j] = !(std::abs(weights_[j]) < threshold || weights_[j] == 0.0);
    std::vector<bool> done(knots_.size(), false);
    for (std::size_t a = 0; a < knots_.size(); ++a) {
      if (done[a]) continue;
      double dropped = 0.0;
      std::ptrdiff_t heaviest = -1;
      for (std::size_t b = a; b < knots_.size(); ++b) {
        if (groups_[b] != groups_[a]) continue;
        done[b] = true;
        if (!keep[b]) {
          dropped += weights_[b];
        } else if (heaviest < 0 || std::abs(weights_[b]) > std::abs(weights_[heaviest])) {
          heaviest = static_cast<std::ptrdiff_t>(b);
        }
      }
      if (heaviest >= 0 && dropped != 0.0) weights_[heaviest] += dropped;
    }
    std::size_t out = 0;
    for (std::size_t j = 0; j < knots_.size(); ++j) {
      if (!keep[j]) continue;
      if (out != j) {
        knots_[out] = knots_[j];
        groups_[out] = groups_[j];
        columns_[out] = std::move(columns_[j]);
        weights_[out] = weights_[j];
      }
      ++out;
    }
    knots_.resize(out);
    groups_.resize(out);
    columns_.resize(out);
    weights_.resize(out);
  }

  // E_x mu (no offset).
  std::vector<double> measure_values() const {
    std::vector<double> v(X_.rows(), 0.0);
    for (std::size_t j = 0; j < knots_.size(); ++j)
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += weights_[j] * columns_[j][i];
    return v;
  }

  std::vector<AtomicMeasure> measures(std::size_t dim) const {
    std::vector<std::vector<Atom>> atoms(dim);
    for (std::size_t j = 0; j < knots_.size(); ++j) atoms[knots_[j].feature].push_back({knots_[j].t, weights_[j]});
    std::vector<AtomicMeasure> out;
    out.reserve(dim);
    for (auto& a : atoms) out.emplace_back(std::move(a));
    return out;
  }

 private:
  const Matrix& X_;
  int degree_;
  std::vector<ActiveKnot> knots_;
  std::vector<std::size_t> groups_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> weights_;
};

inline void validate_scaled(const Matrix& X_scaled, std::span<const double> y, const LossSpec& loss) {
  require(X_scaled.rows() >= 1 && X_scaled.cols() >= 1, "empty dataset");
  require(y.size() == X_scaled.rows(), "response length does not match number of rows");
  for (std::size_t d = 0; d < X_scaled.cols(); ++d)
    for (double v : X_scaled.col(d)) {
      require(std::isfinite(v), "non-finite feature value");
      require(v >= 0.0 && v <= 1.0, "scaled feature values must lie in [0,1]");
    }
  for (double v : y) require(std::isfinite(v), "non-finite response value");
  validate_labels(loss, y);
}

struct GapEvaluation {
  double objective = 0.0;
  double gap = 0.0;
  ConditionalGradient cg;
};

inline GapEvaluation evaluate_gap(const ActiveSet& active, double offset, const Matrix& X_scaled,
                                  std::span<const SortedFeature> sorted, std::span<const double> y,
                                  const LossSpec& loss, double tau, int degree) {
  const std::vector<double> mu = active.measure_values();
  std::vector<double> z(mu);
  for (double& v : z) v += offset;
  auto [f, g] = objective_and_gradient(loss, z, y);
  GapEvaluation ev;
  ev.objective = f;
  ev.cg = lmo_gam(g, sorted, tau, degree);
  std::vector<double> s = direction_values(ev.cg, X_scaled.col(ev.cg.feature), degree);
  ev.gap = duality_gap(g, mu, s).gap;
  return ev;
}

inline double objective_of(const ActiveSet& active, double offset, std::span<const double> y, const LossSpec& loss) {
  std::vector<double> z = active.measure_values();
  for (double& v : z) v += offset;
  return objective(loss, z, y);
}

// One pass of discrete knot moves: each knot tries the neighbouring distinct data
// values on its feature; a move is kept only if the re-solved objective drops.
inline int knot_move_pass(ActiveSet& active, double& offset, std::span<const SortedFeature> sorted,
                          std::span<const double> y, const LossSpec& loss, double tau, const InnerOptions& inner,
                          double& current) {
  int moves = 0;
  for (std::size_t j = 0; j < active.size(); ++j) {
    const ActiveKnot k = active.knots()[j];
    const auto& xs = sorted[k.feature].x;
    auto it = std::lower_bound(xs.begin(), xs.end(), k.t);
    std::vector<double> candidates;
    if (it != xs.begin()) candidates.push_back(*std::prev(it));
    auto up = std::upper_bound(xs.begin(), xs.end(), k.t);
    if (up != xs.end()) candidates.push_back(*up);
    for (double t : candidates) {
      if (active.contains({k.feature, t})) continue;
      const double old_t = active.knots()[j].t;
      const std::vector<double> old_w = active.weights();
      active.move(j, t);
      FullyCorrectiveResult fc =
          fully_corrective_columns(active.columns(), active.groups(), y, loss, tau, active.weights(), offset, inner);
      if (fc.objective < current - 1e-12 * std::max(1.0, std::abs(current))) {
        active.weights() = fc.weights;
        offset = fc.offset;
        current = fc.objective;
        ++moves;
        break;
      }
      active.move(j, old_t);
      active.weights() = old_w;
    }
  }
  return moves;
}

}  // namespace detail

// Warm-start input: per-feature measures and an offset, e.g. a previous path point.
struct WarmStart {
  double offset = 0.0;
  std::vector<AtomicMeasure> per_feature;
};

// Fully-corrective conditional gradient over mass-zero measures on {1..D} x [0,1]:
// LMO -> add the knot pair -> re-solve all weights and the offset -> prune, until
// the duality gap certifies the requested accuracy.
inline FitResult<GamModel> fit_gam_scaled(const Matrix& X_scaled, std::span<const double> y, const LossSpec& loss,
                                          const FitConfig& cfg, const WarmStart* warm = nullptr) {
  cfg.validate();
  detail::validate_scaled(X_scaled, y, loss);
  const std::size_t D = X_scaled.cols();
  const InnerOptions inner = cfg.inner();

  FitResult<GamModel> result;
  GamModel& model = result.model;
  FitReport& report = result.report;
  model.degree = cfg.degree;
  model.tau = cfg.tau;
  model.loss = loss;
  model.scaling = identity_scaling(D);

  const double c0 = best_constant(loss, y);
  if (cfg.tau == 0.0) {
    model.offset = c0;
    model.per_feature.assign(D, AtomicMeasure{});
    std::vector<double> z(y.size(), c0);
    report.final_objective = objective(loss, z, y);
    report.trace.push_back({report.final_objective, 0.0, 0});
    report.termination = Termination::TauZero;
    return result;
  }

  const std::vector<SortedFeature> sorted = sort_features(X_scaled);
  detail::ActiveSet active(X_scaled, cfg.degree);
  double offset = c0;
  if (warm && !warm->per_feature.empty()) {
    require(warm->per_feature.size() == D, "warm start dimension mismatch");
    for (std::size_t d = 0; d < D; ++d)
      for (const Atom& a : warm->per_feature[d].atoms()) {
        const std::size_t j = active.ensure({d, a.t});
        active.weights()[j] = a.w;
      }
    offset = warm->offset;
    if (active.size() > 0) {
      FullyCorrectiveResult fc = fully_corrective_columns(active.columns(), active.groups(), y, loss, cfg.tau,
                                                          active.weights(), offset, inner);
      active.weights() = fc.weights;
      offset = fc.offset;
      active.prune(cfg.prune_threshold);
    }
  }

  double f_prev = detail::objective_of(active, offset, y, loss);
  report.gap_threshold = cfg.gap_tol * std::max(1.0, f_prev);
  for (int m = 0;; ++m) {
    detail::GapEvaluation ev = detail::evaluate_gap(active, offset, X_scaled, sorted, y, loss, cfg.tau, cfg.degree);
    report.trace.push_back({ev.objective, ev.gap, active.size()});
    if (ev.gap <= report.gap_threshold) {
      report.termination = Termination::GapTol;
      break;
    }
    if (m >= cfg.max_outer_iters) {
      report.termination = Termination::MaxIters;
      break;
    }
    if (!ev.cg.zero) {
      active.ensure({ev.cg.feature, ev.cg.t_plus});
      active.ensure({ev.cg.feature, ev.cg.t_minus});
    }
    FullyCorrectiveResult fc = fully_corrective_columns(active.columns(), active.groups(), y, loss, cfg.tau,
                                                        active.weights(), offset, inner);
    if (!fc.inner_converged) ++report.inner_failures;
    active.weights() = fc.weights;
    offset = fc.offset;
    active.prune(cfg.prune_threshold);
    f_prev = fc.objective;
  }

  if (cfg.knot_move && cfg.degree == 1) {
    double current = detail::objective_of(active, offset, y, loss);
    report.knot_moves = detail::knot_move_pass(active, offset, sorted, y, loss, cfg.tau, inner, current);
    if (report.knot_moves > 0) {
      active.prune(cfg.prune_threshold);
      detail::GapEvaluation ev = detail::evaluate_gap(active, offset, X_scaled, sorted, y, loss, cfg.tau, cfg.degree);
      report.trace.push_back({ev.objective, ev.gap, active.size()});
    }
  }

  model.offset = offset;
  model.per_feature = active.measures(D);
  report.final_objective = report.trace.back().objective;
  report.final_gap = report.trace.back().gap;
  return result;
}

// Fits on a raw dataset: learns the [0,1] scaling from it first.
inline FitResult<GamModel> fit_gam(const Dataset& data, const LossSpec& loss, const FitConfig& cfg,
                                   const WarmStart* warm = nullptr) {
  data.validate();
  std::vector<AffineScaling> scaling = fit_scaling(data.X);
  FitResult<GamModel> r = fit_gam_scaled(apply_scaling(scaling, data.X), data.y, loss, cfg, warm);
  r.model.scaling = std::move(scaling);
  r.model.names = data.names;
  return r;
}

inline FitResult<SplineModel> fit_univariate(std::span<const double> x, std::span<const double> y,
                                             const LossSpec& loss, const FitConfig& cfg) {
  require(x.size() == y.size(), "x/y length mismatch");
  require(!x.empty(), "empty data");
  Matrix X(x.size(), 1);
  std::copy(x.begin(), x.end(), X.col(0).begin());
  FitResult<GamModel> r = fit_gam_scaled(X, y, loss, cfg);
  return {to_spline(r.model), std::move(r.report)};
}

// Recomputes objective and duality gap of a model from scratch on scaled data.
inline detail::GapEvaluation certify(const GamModel& model, const Matrix& X_scaled, std::span<const double> y) {
  const std::vector<SortedFeature> sorted = sort_features(X_scaled);
  std::vector<double> mu(X_scaled.rows(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i)
    for (std::size_t d = 0; d < model.dim(); ++d) mu[i] += model.coordinate(d, X_scaled(i, d));
  std::vector<double> z(mu);
  for (double& v : z) v += model.offset;
  auto [f, g] = objective_and_gradient(model.loss, z, y);
  detail::GapEvaluation ev;
  ev.objective = f;
  ev.cg = lmo_gam(g, sorted, model.tau, model.degree);
  ev.gap = duality_gap(g, mu, direction_values(ev.cg, X_scaled.col(ev.cg.feature), model.degree)).gap;
  return ev;
}

// Weights on a fixed knot set (knots given per feature on scaled data).
inline FullyCorrectiveResult fully_corrective(std::span<const ActiveKnot> knots, const Matrix& X_scaled,
                                              std::span<const double> y, const LossSpec& loss, double tau,
                                              std::span<const double> warm_weights, double warm_offset = 0.0,
                                              int degree = 1, const InnerOptions& inner = {}) {
  require(knots.size() == warm_weights.size(), "knot/weight length mismatch");
  std::vector<std::vector<double>> columns;
  std::vector<std::size_t> groups;
  for (const ActiveKnot& k : knots) {
    require(k.feature < X_scaled.cols(), "knot feature out of range");
    columns.push_back(knot_column(X_scaled.col(k.feature), k.t, degree));
    groups.push_back(k.feature);
  }
  return fully_corrective_columns(columns, groups, y, loss, tau, warm_weights, warm_offset, inner);
}

// Discrete knot adjustment on a fitted degree-one model (scaled data). Never
// increases the objective and never adds atoms.
inline GamModel knot_move(const GamModel& model, const Matrix& X_scaled, std::span<const double> y,
                          const InnerOptions& inner = {}) {
  require(model.degree == 1, "knot moves are defined for degree-one models");
  const std::vector<SortedFeature> sorted = sort_features(X_scaled);
  detail::ActiveSet active(X_scaled, 1);
  for (std::size_t d = 0; d < model.dim(); ++d)
    for (const Atom& a : model.per_feature[d].atoms()) active.weights()[active.ensure({d, a.t})] = a.w;
  double offset = model.offset;
  double current = detail::objective_of(active, offset, y, model.loss);
  const int moves = detail::knot_move_pass(active, offset, sorted, y, model.loss, model.tau, inner, current);
  if (moves == 0) return model;
  GamModel out = model;
  out.offset = offset;
  out.per_feature = active.measures(model.dim());
  return out;
}

}  // namespace satspline
