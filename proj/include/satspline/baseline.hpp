#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "satspline/dataset.hpp"
#include "satspline/error.hpp"
#include "satspline/loss.hpp"
#include "satspline/model.hpp"

namespace satspline::baseline {

// Gridded alternative: per feature, knots t_1 < ... < t_k and the saturating
// hinges s_j(x) = (x - t_j)_+ - (x - t_k)_+, j < k. Any coefficient vector on
// these columns is a hinge expansion whose weights sum to zero.
struct SaturatingHingeBasis {
  std::vector<std::vector<double>> knots;  // per feature, ascending

  struct Column {
    std::size_t feature;
    std::size_t index;  // j in s_j
  };
  std::vector<Column> columns;

  double eval(const Column& c, double x) const {
    const auto& t = knots[c.feature];
    return hinge(x, t[c.index], 1) - hinge(x, t.back(), 1);
  }
};

struct Design {
  SaturatingHingeBasis basis;
  Matrix matrix;  // n x p
};

inline std::vector<double> evenly_spaced_knots(std::size_t count) {
  require(count >= 2, "need at least two knots");
  std::vector<double> t(count);
  for (std::size_t j = 0; j < count; ++j) t[j] = static_cast<double>(j) / static_cast<double>(count - 1);
  t.back() = 1.0;
  return t;
}

inline Design build_basis(const Matrix& X_scaled, const std::vector<std::vector<double>>& knots_per_feature) {
  require(knots_per_feature.size() == X_scaled.cols(), "one knot list per feature required");
  Design d;
  d.basis.knots = knots_per_feature;
  for (std::size_t f = 0; f < knots_per_feature.size(); ++f) {
    const auto& t = knots_per_feature[f];
    require(t.size() >= 2, "each feature needs at least two knots");
    for (std::size_t j = 0; j < t.size(); ++j) {
      require(t[j] >= 0.0 && t[j] <= 1.0, "knots must lie in [0,1]");
      require(j == 0 || t[j] > t[j - 1], "knots must be strictly increasing");
    }
    for (std::size_t j = 0; j + 1 < t.size(); ++j) d.basis.columns.push_back({f, j});
  }
  d.matrix = Matrix(X_scaled.rows(), d.basis.columns.size());
  for (std::size_t c = 0; c < d.basis.columns.size(); ++c) {
    const auto& col = d.basis.columns[c];
    auto x = X_scaled.col(col.feature);
    auto out = d.matrix.col(c);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = d.basis.eval(col, x[i]);
  }
  return d;
}

struct LassoOptions {
  double tol = 1e-8;   // relative objective change
  int max_iters = 100000;
};

struct LassoFit {
  std::vector<double> theta;
  double intercept = 0.0;
  double objective = 0.0;  // data fit + lambda ||theta||_1
  double data_fit = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline std::vector<double> linear_predictor(const Matrix& A, std::span<const double> theta, double b0) {
  std::vector<double> z(A.rows(), b0);
  for (std::size_t c = 0; c < A.cols(); ++c) {
    if (theta[c] == 0.0) continue;
    auto col = A.col(c);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += theta[c] * col[i];
  }
  return z;
}

inline double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace detail

// min_{b0, theta} sum_i l(b0 + A_i theta, y_i) + lambda ||theta||_1 by accelerated
// proximal gradient with backtracking; restarts momentum whenever the objective rises.
inline LassoFit fit_lasso(const Matrix& A, std::span<const double> y, const LossSpec& loss, double lambda,
                          const LassoOptions& opt = {}, const LassoFit* warm = nullptr) {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be non-negative");
  require(A.rows() == y.size(), "design/response length mismatch");
  validate_labels(loss, y);
  const std::size_t p = A.cols();
  const std::size_t n = y.size();

  LassoFit fit;
  fit.theta.assign(p, 0.0);
  fit.intercept = best_constant(loss, y);
  if (warm && warm->theta.size() == p) {
    fit.theta = warm->theta;
    fit.intercept = warm->intercept;
  }

  auto data_fit = [&](std::span<const double> th, double b0) {
    return objective(loss, detail::linear_predictor(A, th, b0), y);
  };
  auto penalty = [&](std::span<const double> th) {
    double s = 0.0;
    for (double v : th) s += std::abs(v);
    return lambda * s;
  };

  std::vector<double> x = fit.theta, x_prev = x, v = x, grad(p), next(p);
  double b = fit.intercept, b_prev = b, bv = b;
  double momentum = 1.0;
  double L = 1.0;
  double F = data_fit(x, b) + penalty(x);
  std::vector<double> g(n);
  for (int it = 1; it <= opt.max_iters; ++it) {
    // gradient at the extrapolated point (v, bv)
    const std::vector<double> z = detail::linear_predictor(A, v, bv);
    double fv = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fv += loss_value(loss, z[i], y[i]);
      g[i] = loss_grad(loss, z[i], y[i]);
      gb += g[i];
    }
    for (std::size_t c = 0; c < p; ++c) {
      auto col = A.col(c);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += col[i] * g[i];
      grad[c] = s;
    }
    double fnext = 0.0, bnext = 0.0;
    for (;;) {
      for (std::size_t c = 0; c < p; ++c) next[c] = detail::soft_threshold(v[c] - grad[c] / L, lambda / L);
      bnext = bv - gb / L;
      fnext = data_fit(next, bnext);
      double lin = gb * (bnext - bv), quad = (bnext - bv) * (bnext - bv);
      for (std::size_t c = 0; c < p; ++c) {
        const double d = next[c] - v[c];
        lin += grad[c] * d;
        quad += d * d;
      }
      if (fnext <= fv + lin + 0.5 * L * quad + 1e-12 * std::abs(fv)) break;
      L *= 2.0;
      if (!(L < 1e300)) throw SolverError("lasso step size underflow");
    }
    const double Fnext = fnext + penalty(next);
    double mapping = std::abs(bnext - bv);
    for (std::size_t c = 0; c < p; ++c) mapping = std::max(mapping, std::abs(next[c] - v[c]));
    mapping *= L;  // sup-norm of the gradient mapping, zero exactly at a KKT point
    x_prev = x;
    b_prev = b;
    x = next;
    b = bnext;
    fit.iterations = it;
    const double change = std::abs(F - Fnext);
    if (Fnext > F) {
      momentum = 1.0;  // restart
      v = x;
      bv = b;
    } else {
      const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / m_next;
      for (std::size_t c = 0; c < p; ++c) v[c] = x[c] + beta * (x[c] - x_prev[c]);
      bv = b + beta * (b - b_prev);
      momentum = m_next;
    }
    F = Fnext;
    L = std::max(L * 0.9, 1e-12);
    // per-iteration change two orders below the target keeps the true gap near tol
    if (change <= 1e-2 * opt.tol * std::max(1.0, std::abs(F)) && mapping <= std::sqrt(opt.tol) && it > 1) {
      fit.converged = true;
      break;
    }
  }
  fit.theta = x;
  fit.intercept = b;
  fit.data_fit = data_fit(x, b);
  fit.objective = fit.data_fit + penalty(x);
  return fit;
}

// lambda above which theta = 0 is optimal (intercept at the best constant).
inline double lambda_max(const Matrix& A, std::span<const double> y, const LossSpec& loss) {
  const double c = best_constant(loss, y);
  double m = 0.0;
  for (std::size_t col = 0; col < A.cols(); ++col) {
    auto a = A.col(col);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += a[i] * loss_grad(loss, c, y[i]);
    m = std::max(m, std::abs(s));
  }
  return m;
}

// theta -> hinge weights: w_j = theta_j for j < k, w_k = -sum_j theta_j.
inline GamModel baseline_to_model(const LassoFit& fit, const SaturatingHingeBasis& basis,
                                  std::vector<AffineScaling> scaling, const LossSpec& loss) {
  require(fit.theta.size() == basis.columns.size(), "coefficient count does not match basis");
  const std::size_t D = basis.knots.size();
  std::vector<std::vector<Atom>> atoms(D);
  std::vector<double> last(D, 0.0);
  for (std::size_t c = 0; c < basis.columns.size(); ++c) {
    const auto& col = basis.columns[c];
    if (fit.theta[c] == 0.0) continue;
    atoms[col.feature].push_back({basis.knots[col.feature][col.index], fit.theta[c]});
    last[col.feature] -= fit.theta[c];
  }
  GamModel m;
  m.offset = fit.intercept;
  m.degree = 1;
  m.loss = loss;
  m.scaling = scaling.empty() ? identity_scaling(D) : std::move(scaling);
  for (std::size_t d = 0; d < D; ++d) {
    if (!atoms[d].empty()) atoms[d].push_back({basis.knots[d].back(), last[d]});
    m.per_feature.emplace_back(std::move(atoms[d]));
  }
  m.tau = m.l1_norm();
  return m;
}

}  // namespace satspline::baseline
