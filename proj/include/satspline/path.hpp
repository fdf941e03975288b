#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "satspline/dataset.hpp"
#include "satspline/error.hpp"
#include "satspline/loss.hpp"
#include "satspline/model.hpp"
#include "satspline/solver.hpp"

namespace satspline {

enum class Metric { Rmse, Mse, ErrorRate };

inline Metric default_metric(const LossSpec& loss) {
  return loss.kind == LossKind::Logistic ? Metric::ErrorRate : Metric::Rmse;
}

inline std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Rmse: return "rmse";
    case Metric::Mse: return "mse";
    case Metric::ErrorRate: return "error_rate";
  }
  return "rmse";
}

// Misclassification uses the sign of the prediction, threshold 0.
inline double evaluate_metric(Metric metric, std::span<const double> predicted, std::span<const double> y) {
  require(predicted.size() == y.size() && !y.empty(), "metric inputs must be non-empty and equal length");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (metric == Metric::ErrorRate) {
      const double label = predicted[i] > 0.0 ? 1.0 : -1.0;
      s += label == y[i] ? 0.0 : 1.0;
    } else {
      const double r = predicted[i] - y[i];
      s += r * r;
    }
  }
  s /= static_cast<double>(y.size());
  return metric == Metric::Rmse ? std::sqrt(s) : s;
}

// Geometric grid from tau_min to tau_max inclusive.
inline std::vector<double> default_tau_grid(double tau_min, double tau_max, std::size_t count) {
  require(tau_min > 0.0 && tau_max > tau_min && std::isfinite(tau_max), "tau grid needs 0 < tau_min < tau_max");
  require(count >= 2, "tau grid needs at least two points");
  std::vector<double> grid(count);
  const double ratio = std::log(tau_max / tau_min) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = tau_min * std::exp(ratio * static_cast<double>(i));
  grid.front() = tau_min;
  grid.back() = tau_max;
  return grid;
}

// 4 n std(y): roughly where a univariate square-loss fit starts to interpolate.
inline double default_tau_max(std::span<const double> y) {
  require(!y.empty(), "empty response");
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  return 4.0 * n * (sd > 0.0 ? sd : 1.0);
}

struct PathPoint {
  double tau = 0.0;
  GamModel model;
  double train_objective = 0.0;
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> atoms_per_feature;
  std::size_t n_atoms = 0;
  std::size_t n_features_selected = 0;
  bool converged = true;
  double final_gap = 0.0;
};

struct PathResult {
  std::vector<PathPoint> points;
  Metric metric = Metric::Rmse;
};

// Warm-started path over ascending taus. Scaling is learned on `train`; the
// optional validation set is scored with that scaling.
inline PathResult fit_path(const Dataset& train, const LossSpec& loss, std::span<const double> taus,
                           const FitConfig& cfg, const Dataset* validation = nullptr,
                           Metric metric = Metric::Rmse) {
  require(!taus.empty(), "empty tau list");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(taus[i] > 0.0 && std::isfinite(taus[i]), "taus must be positive");
    require(i == 0 || taus[i] > taus[i - 1], "taus must be strictly increasing");
  }
  train.validate();
  if (validation) {
    validation->validate();
    require(validation->dim() == train.dim(), "validation set has a different number of features");
  }
  const std::vector<AffineScaling> scaling = fit_scaling(train.X);
  const Matrix Xs = apply_scaling(scaling, train.X);
  PathResult out;
  out.metric = metric;
  WarmStart warm;
  for (double tau : taus) {
    FitConfig c = cfg;
    c.tau = tau;
    FitResult<GamModel> r;
    try {
      r = fit_gam_scaled(Xs, train.y, loss, c, warm.per_feature.empty() ? nullptr : &warm);
    } catch (const std::exception& e) {
      throw SolverError("fit failed at tau=" + std::to_string(tau) + ": " + e.what());
    }
    r.model.scaling = scaling;
    r.model.names = train.names;
    PathPoint p;
    p.tau = tau;
    p.train_objective = r.report.final_objective;
    p.converged = r.report.converged();
    p.final_gap = r.report.final_gap;
    for (const auto& m : r.model.per_feature) p.atoms_per_feature.push_back(m.size());
    p.n_atoms = r.model.atom_count();
    p.n_features_selected = r.model.selected_features();
    if (validation) p.val_metric = evaluate_metric(metric, predict(r.model, validation->X), validation->y);
    warm.offset = r.model.offset;
    warm.per_feature = r.model.per_feature;
    p.model = std::move(r.model);
    out.points.push_back(std::move(p));
  }
  return out;
}

// Deterministic Fisher-Yates over a 64-bit Mersenne Twister; independent of the
// standard library's distribution implementations.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(r % bound)]);
  }
  return idx;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

inline Split holdout_split(std::size_t n, double holdout_fraction, std::uint64_t seed) {
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout fraction must lie in (0,1)");
  const auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  require(n_hold >= 2, "holdout set too small (needs at least 2 samples)");
  require(n_hold < n, "holdout leaves no training data");
  std::vector<std::size_t> perm = seeded_permutation(n, seed);
  Split s;
  s.holdout.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
  std::sort(s.holdout.begin(), s.holdout.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

struct HoldoutResult {
  double best_tau = 0.0;
  std::size_t best_index = 0;
  PathResult path;
  Split split;
};

inline std::size_t argmin_metric(const PathResult& path) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < path.points.size(); ++i)
    if (path.points[i].val_metric < path.points[best].val_metric) best = i;
  return best;
}

inline HoldoutResult holdout_select(const Dataset& data, const LossSpec& loss, std::span<const double> taus,
                                    double holdout_fraction, std::uint64_t seed, const FitConfig& cfg = {},
                                    Metric metric = Metric::Rmse) {
  data.validate();
  HoldoutResult r;
  r.split = holdout_split(data.n(), holdout_fraction, seed);
  const Dataset train = data.subset(r.split.train);
  const Dataset hold = data.subset(r.split.holdout);
  r.path = fit_path(train, loss, taus, cfg, &hold, metric);
  r.best_index = argmin_metric(r.path);
  r.best_tau = r.path.points[r.best_index].tau;
  return r;
}

struct RepeatedHoldoutResult {
  double mean_best_tau = 0.0;
  std::vector<double> per_trial_best_tau;
  std::vector<double> per_trial_best_metric;
};

// R independent random splits (trial r uses seed + r); the estimate is the mean of
// the per-trial best taus. Trials run concurrently.
inline RepeatedHoldoutResult repeated_holdout(const Dataset& data, const LossSpec& loss, std::span<const double> taus,
                                              double holdout_fraction, std::uint64_t seed, std::size_t trials,
                                              const FitConfig& cfg = {}, Metric metric = Metric::Rmse) {
  require(trials >= 1, "need at least one trial");
  std::vector<double> tau_list(taus.begin(), taus.end());
  std::vector<std::future<HoldoutResult>> jobs;
  for (std::size_t t = 0; t < trials; ++t)
    jobs.push_back(std::async(std::launch::async, [&, t] {
      return holdout_select(data, loss, tau_list, holdout_fraction, seed + t, cfg, metric);
    }));
  RepeatedHoldoutResult out;
  for (auto& j : jobs) {
    HoldoutResult h = j.get();
    out.per_trial_best_tau.push_back(h.best_tau);
    out.per_trial_best_metric.push_back(h.path.points[h.best_index].val_metric);
  }
  out.mean_best_tau = std::accumulate(out.per_trial_best_tau.begin(), out.per_trial_best_tau.end(), 0.0) /
                      static_cast<double>(trials);
  return out;
}

}  // namespace satspline
