#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "satspline/error.hpp"
#include "satspline/loss.hpp"
#include "satspline/measure.hpp"

namespace satspline {

// A knot attached to one coordinate.
struct ActiveKnot {
  std::size_t feature = 0;
  double t = 0.0;

  friend bool operator==(const ActiveKnot&, const ActiveKnot&) = default;
};

struct InnerOptions {
  int newton_iters = 20;
  int inner_cgm_iters = 200;
  double inner_gap_tol = 1e-9;  // relative to max(1, objective)
  int max_halvings = 10;
};

struct FullyCorrectiveResult {
  std::vector<double> weights;
  double offset = 0.0;
  double objective = 0.0;
  int newton_rounds = 0;
  int inner_iterations = 0;
  bool inner_converged = true;
};

// Vertex of {w : per-group sum(w) = 0, ||w||_1 <= tau}: (tau/2)(e_plus - e_minus)
// with plus/minus in one group. `none` means the zero vector.
struct WeightVertex {
  static constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::size_t plus = none;
  std::size_t minus = none;
  double value = 0.0;  // <grad, vertex>

  bool is_zero() const { return plus == none; }
};

// Minimizes <grad, w> over the weight polytope by pair enumeration within groups:
// per group the best pair is (argmin grad, argmax grad). Ties keep the first index
// and the first group.
inline WeightVertex lmo_weight_vertex(std::span<const double> grad, std::span<const std::size_t> groups, double tau) {
  require(grad.size() == groups.size(), "gradient/group length mismatch");
  WeightVertex best;
  const std::size_t k = grad.size();
  std::vector<bool> seen(k, false);
  for (std::size_t a = 0; a < k; ++a) {
    if (seen[a]) continue;
    std::size_t lo = a, hi = a;
    for (std::size_t b = a; b < k; ++b) {
      if (groups[b] != groups[a]) continue;
      seen[b] = true;
      if (grad[b] < grad[lo]) lo = b;
      if (grad[b] > grad[hi]) hi = b;
    }
    const double v = 0.5 * tau * (grad[lo] - grad[hi]);
    if (lo != hi && v < best.value) best = {lo, hi, v};
  }
  return best;
}

inline std::vector<double> lmo_weights(std::span<const double> grad, std::span<const std::size_t> groups, double tau) {
  const WeightVertex v = lmo_weight_vertex(grad, groups, tau);
  std::vector<double> w(grad.size(), 0.0);
  if (!v.is_zero()) {
    w[v.plus] = 0.5 * tau;
    w[v.minus] = -0.5 * tau;
  }
  return w;
}

// Makes w feasible: removes each group's mean, then shrinks onto the l1 ball.
inline void project_feasible(std::vector<double>& w, std::span<const std::size_t> groups, double tau) {
  const std::size_t k = w.size();
  std::vector<bool> seen(k, false);
  for (std::size_t a = 0; a < k; ++a) {
    if (seen[a]) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t b = a; b < k; ++b)
      if (groups[b] == groups[a]) {
        sum += w[b];
        ++count;
      }
    const double mean = sum / static_cast<double>(count);
    for (std::size_t b = a; b < k; ++b)
      if (groups[b] == groups[a]) {
        if (mean != 0.0) w[b] -= mean;
        seen[b] = true;
      }
  }
  double l1 = 0.0;
  for (double v : w) l1 += std::abs(v);
  if (l1 > tau) {
    const double s = l1 > 0.0 ? tau / l1 : 0.0;
    for (double& v : w) v *= s;
  }
}

namespace detail {

// Convex-combination bookkeeping for the pairwise conditional gradient: w is kept
// as sum_a lambda_a v_a over pair vertices plus (1 - sum lambda) times zero.
class VertexPool {
 public:
  struct Entry {
    std::size_t plus, minus;
    double lambda;
  };

  VertexPool(std::span<const double> w, std::span<const std::size_t> groups, double tau) : half_(0.5 * tau) {
    if (tau <= 0.0) return;
    const std::size_t k = w.size();
    std::vector<bool> seen(k, false);
    for (std::size_t a = 0; a < k; ++a) {
      if (seen[a]) continue;
      std::vector<std::size_t> pos, neg;
      for (std::size_t b = a; b < k; ++b) {
        if (groups[b] != groups[a]) continue;
        seen[b] = true;
        if (w[b] > 0.0) pos.push_back(b);
        if (w[b] < 0.0) neg.push_back(b);
      }
      std::size_t ip = 0, in = 0;
      double rp = pos.empty() ? 0.0 : w[pos[0]];
      double rn = neg.empty() ? 0.0 : -w[neg[0]];
      while (ip < pos.size() && in < neg.size()) {
        const double amount = std::min(rp, rn);
        if (amount > 0.0) entries_.push_back({pos[ip], neg[in], amount / half_});
        rp -= amount;
        rn -= amount;
        if (rp <= 0.0 && ++ip < pos.size()) rp = w[pos[ip]];
        if (rn <= 0.0 && ++in < neg.size()) rn = -w[neg[in]];
      }
    }
    double total = 0.0;
    for (const Entry& e : entries_) total += e.lambda;
    if (total > 1.0) {
      for (Entry& e : entries_) e.lambda /= total;
    }
  }

  double zero_weight() const {
    double total = 0.0;
    for (const Entry& e : entries_) total += e.lambda;
    return std::max(0.0, 1.0 - total);
  }

  std::vector<Entry>& entries() { return entries_; }

  void add(std::size_t plus, std::size_t minus, double amount) {
    for (Entry& e : entries_)
      if (e.plus == plus && e.minus == minus) {
        e.lambda += amount;
        return;
      }
    entries_.push_back({plus, minus, amount});
  }

  void remove_empty() {
    std::erase_if(entries_, [](const Entry& e) { return e.lambda <= 0.0; });
  }

  std::vector<double> weights(std::size_t k) const {
    std::vector<double> w(k, 0.0);
    for (const Entry& e : entries_) {
      w[e.plus] += half_ * e.lambda;
      w[e.minus] -= half_ * e.lambda;
    }
    return w;
  }

 private:
  double half_;
  std::vector<Entry> entries_;
};

struct QuadraticSolve {
  std::vector<double> w;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Exact minimization of the quadratic on the face of the polytope that contains w:
// the support and signs of w stay fixed, per-group sums stay zero and, when w sits
// on the l1 sphere, sum sign_j w_j = tau is kept. The step towards the face
// minimizer is cut at the first sign change or at the l1 sphere. Returns false
// when no progress is possible.
inline bool face_step(std::vector<double>& w, std::span<const double> grad, const std::vector<double>& M,
                      std::span<const std::size_t> groups, double tau) {
  const std::size_t k = w.size();
  std::vector<std::size_t> S;
  for (std::size_t j = 0; j < k; ++j)
    if (w[j] != 0.0) S.push_back(j);
  if (S.size() < 2) return false;
  double l1 = 0.0;
  for (std::size_t j : S) l1 += std::abs(w[j]);
  const bool on_sphere = l1 >= tau * (1.0 - 1e-12);

  std::vector<std::size_t> face_groups;
  for (std::size_t j : S)
    if (std::find(face_groups.begin(), face_groups.end(), groups[j]) == face_groups.end())
      face_groups.push_back(groups[j]);
  const std::size_t s = S.size();
  const std::size_t m = face_groups.size() + (on_sphere ? 1 : 0);

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s + m), static_cast<Eigen::Index>(s + m));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s + m));
  double diag_max = 0.0;
  for (std::size_t a = 0; a < s; ++a) diag_max = std::max(diag_max, M[S[a] * k + S[a]]);
  const double ridge = 1e-13 * std::max(diag_max, 1e-300);
  for (std::size_t a = 0; a < s; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    for (std::size_t c = 0; c < s; ++c) K(ia, static_cast<Eigen::Index>(c)) = M[S[a] * k + S[c]];
    K(ia, ia) += ridge;
    rhs(ia) = -grad[S[a]];
    for (std::size_t r = 0; r < face_groups.size(); ++r)
      if (groups[S[a]] == face_groups[r]) {
        const auto ir = static_cast<Eigen::Index>(s + r);
        K(ia, ir) = K(ir, ia) = 1.0;
      }
    if (on_sphere) {
      const auto ir = static_cast<Eigen::Index>(s + m - 1);
      K(ia, ir) = K(ir, ia) = w[S[a]] > 0.0 ? 1.0 : -1.0;
    }
  }
  const Eigen::VectorXd sol = K.colPivHouseholderQr().solve(rhs);
  std::vector<double> p(s);
  double slope = 0.0, curv = 0.0;
  for (std::size_t a = 0; a < s; ++a) {
    p[a] = sol(static_cast<Eigen::Index>(a));
    if (!std::isfinite(p[a])) return false;
    slope += grad[S[a]] * p[a];
  }
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t c = 0; c < s; ++c) curv += p[a] * M[S[a] * k + S[c]] * p[c];
  if (!(slope < 0.0)) return false;

  // Largest feasible step along p, capped at the face minimizer (alpha = 1).
  double alpha = 1.0;
  std::ptrdiff_t blocking = -1;
  for (std::size_t a = 0; a < s; ++a) {
    const double wj = w[S[a]];
    if ((wj > 0.0 && p[a] < 0.0) || (wj < 0.0 && p[a] > 0.0)) {
      const double lim = -wj / p[a];
      if (lim < alpha) {
        alpha = lim;
        blocking = static_cast<std::ptrdiff_t>(a);
      }
    }
  }
  if (!on_sphere) {
    double sp = 0.0;
    for (std::size_t a = 0; a < s; ++a) sp += (w[S[a]] > 0.0 ? 1.0 : -1.0) * p[a];
    if (sp > 0.0 && (tau - l1) / sp < alpha) {
      alpha = std::max(0.0, (tau - l1) / sp);
      blocking = -1;
    }
  }
  // Exact minimizer along the ray when the curvature says so.
  if (curv > 0.0) alpha = std::min(alpha, -slope / curv);
  if (!(alpha > 0.0)) return false;
  for (std::size_t a = 0; a < s; ++a) w[S[a]] += alpha * p[a];
  if (blocking >= 0 && alpha == -(w[S[blocking]] - alpha * p[blocking]) / p[blocking]) w[S[blocking]] = 0.0;
  // Snap sign flips caused by round-off.
  for (std::size_t a = 0; a < s; ++a) {
    const double before = w[S[a]] - alpha * p[a];
    if ((before > 0.0 && w[S[a]] < 0.0) || (before < 0.0 && w[S[a]] > 0.0)) w[S[a]] = 0.0;
  }
  if (blocking >= 0) w[S[blocking]] = 0.0;
  return true;
}

inline void refresh_gradient(std::vector<double>& grad, std::span<const double> b, const std::vector<double>& M,
                             std::span<const double> w, std::span<const double> w0) {
  const std::size_t k = b.size();
  std::copy(b.begin(), b.end(), grad.begin());
  for (std::size_t i = 0; i < k; ++i) {
    const double dw = w[i] - w0[i];
    if (dw == 0.0) continue;
    for (std::size_t r = 0; r < k; ++r) grad[r] += M[r * k + i] * dw;
  }
}

// Minimizes b'(w - w0) + 1/2 (w - w0)' M (w - w0) over the weight polytope with the
// conditional gradient method and exact line search. Each step moves mass from
// the worst active vertex to the Frank-Wolfe vertex, then the quadratic is
// minimized exactly on the resulting face.
inline QuadraticSolve minimize_quadratic(std::span<const double> b, const std::vector<double>& M,
                                         std::span<const double> w0, std::span<const std::size_t> groups, double tau,
                                         int max_iters, double gap_tol) {
  const std::size_t k = b.size();
  QuadraticSolve out;
  VertexPool pool(w0, groups, tau);
  out.w = pool.weights(k);
  if (tau <= 0.0 || k == 0) {
    out.converged = true;
    return out;
  }
  const double half = 0.5 * tau;
  std::vector<double> grad(k);
  refresh_gradient(grad, b, M, out.w, w0);
  std::vector<std::pair<std::size_t, double>> dir;
  for (int it = 0;; ++it) {
    const WeightVertex s = lmo_weight_vertex(grad, groups, tau);
    double gw = 0.0;
    for (std::size_t i = 0; i < k; ++i) gw += grad[i] * out.w[i];
    out.gap = gw - s.value;
    out.iterations = it;
    if (out.gap <= gap_tol) {
      out.converged = true;
      break;
    }
    if (it >= max_iters) break;

    // Away vertex: the active atom with the largest <grad, v>.
    auto& entries = pool.entries();
    std::ptrdiff_t away = -1;
    double away_lambda = pool.zero_weight();
    double away_value = away_lambda > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double v = half * (grad[entries[e].plus] - grad[entries[e].minus]);
      if (v > away_value) {
        away_value = v;
        away = static_cast<std::ptrdiff_t>(e);
        away_lambda = entries[e].lambda;
      }
    }
    dir.clear();
    if (!s.is_zero()) {
      dir.emplace_back(s.plus, half);
      dir.emplace_back(s.minus, -half);
    }
    if (away >= 0) {
      dir.emplace_back(entries[away].plus, -half);
      dir.emplace_back(entries[away].minus, half);
    }
    double slope = 0.0;
    for (auto [i, v] : dir) slope += grad[i] * v;
    bool moved = false;
    if (slope < 0.0) {
      double curv = 0.0;
      for (auto [i, vi] : dir)
        for (auto [j, vj] : dir) curv += vi * M[i * k + j] * vj;
      double step = curv > 0.0 ? -slope / curv : away_lambda;
      if (step >= away_lambda) step = away_lambda;
      if (step > 0.0) {
        if (!s.is_zero()) pool.add(s.plus, s.minus, step);
        if (away >= 0) {
          if (step == away_lambda) entries[away].lambda = 0.0;
          else entries[away].lambda -= step;
        }
        pool.remove_empty();
        out.w = pool.weights(k);
        refresh_gradient(grad, b, M, out.w, w0);
        moved = true;
      }
    }
    if (face_step(out.w, grad, M, groups, tau)) {
      pool = VertexPool(out.w, groups, tau);
      out.w = pool.weights(k);
      refresh_gradient(grad, b, M, out.w, w0);
      moved = true;
    }
    if (!moved) break;
  }
  out.w = pool.weights(k);
  return out;
}

}  // namespace detail

// Fits weights on a fixed knot set plus a free offset:
//   minimize sum_i l(c + sum_j w_j phi_j(x_i), y_i)
//   s.t. per-group sum(w) = 0, ||w||_1 <= tau.
// `columns[j]` holds phi_j at every sample. Each proximal Newton round minimizes the
// local quadratic model over the polytope (offset eliminated in closed form), then
// takes a unit step, halving only if the true objective would increase.
inline FullyCorrectiveResult fully_corrective_columns(const std::vector<std::vector<double>>& columns,
                                                      std::span<const std::size_t> groups,
                                                      std::span<const double> y, const LossSpec& loss, double tau,
                                                      std::span<const double> warm_weights, double warm_offset,
                                                      const InnerOptions& opt = {}) {
  const std::size_t k = columns.size();
  const std::size_t n = y.size();
  require(groups.size() == k && warm_weights.size() == k, "knot bookkeeping length mismatch");
  require(tau >= 0.0, "tau must be non-negative");
  for (const auto& c : columns) require(c.size() == n, "basis column length mismatch");

  FullyCorrectiveResult res;
  res.weights.assign(warm_weights.begin(), warm_weights.end());
  res.offset = warm_offset;
  project_feasible(res.weights, groups, tau);
  res.weights = detail::VertexPool(res.weights, groups, tau).weights(k);

  std::vector<double> z(n);
  auto fitted = [&](const std::vector<double>& w, double c) {
    std::fill(z.begin(), z.end(), c);
    for (std::size_t j = 0; j < k; ++j)
      if (w[j] != 0.0)
        for (std::size_t i = 0; i < n; ++i) z[i] += w[j] * columns[j][i];
    return objective(loss, z, y);
  };

  double f = fitted(res.weights, res.offset);
  std::vector<double> g(n), h(n), b(k), ph(k), M(k * k);
  for (int round = 0; round < opt.newton_iters; ++round) {
    fitted(res.weights, res.offset);
    double G = 0.0, H = 0.0, hmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = loss_grad(loss, z[i], y[i]);
      h[i] = loss_hess(loss, z[i], y[i]);
      hmax = std::max(hmax, h[i]);
    }
    const double floor = std::max(1e-12, 1e-10 * hmax);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = std::max(h[i], floor);
      G += g[i];
      H += h[i];
    }
    // b = Phi'(g - (G/H) h),  M = Phi' D Phi - (Phi'h)(Phi'h)' / H
    for (std::size_t j = 0; j < k; ++j) {
      double bj = 0.0, pj = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        bj += columns[j][i] * g[i];
        pj += columns[j][i] * h[i];
      }
      ph[j] = pj;
      b[j] = bj - G / H * pj;
    }
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t c = a; c < k; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += columns[a][i] * h[i] * columns[c][i];
        s -= ph[a] * ph[c] / H;
        M[a * k + c] = M[c * k + a] = s;
      }

    const double scale = std::max(1.0, std::abs(f));
    detail::QuadraticSolve qs = detail::minimize_quadratic(b, M, res.weights, groups, tau, opt.inner_cgm_iters,
                                                           opt.inner_gap_tol * scale);
    res.inner_iterations += qs.iterations;
    res.newton_rounds = round + 1;
    if (!qs.converged) res.inner_converged = false;

    std::vector<double> dw(k);
    double hdw = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      dw[j] = qs.w[j] - res.weights[j];
      hdw += ph[j] * dw[j];
    }
    const double dc = -(G + hdw) / H;

    // Predicted decrease of the quadratic model (offset included).
    double lin = 0.0, quad = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      lin += b[a] * dw[a];
      for (std::size_t c = 0; c < k; ++c) quad += dw[a] * M[a * k + c] * dw[c];
    }
    const double predicted = -(lin + 0.5 * quad - G * G / (2.0 * H));

    double step = 1.0;
    std::vector<double> trial(k);
    double f_trial = f;
    bool accepted = false;
    for (int half = 0; half <= opt.max_halvings; ++half) {
      for (std::size_t j = 0; j < k; ++j) trial[j] = res.weights[j] + step * dw[j];
      f_trial = fitted(trial, res.offset + step * dc);
      if (f_trial <= f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double decrease = f - f_trial;
    res.weights = trial;
    res.offset += step * dc;
    f = f_trial;
    if (predicted <= 1e-13 * scale || decrease <= 1e-15 * scale) break;
  }
  res.objective = fitted(res.weights, res.offset);
  return res;
}

inline std::vector<double> knot_column(std::span<const double> x_feature, double t, int degree) {
  std::vector<double> col(x_feature.size());
  for (std::size_t i = 0; i < x_feature.size(); ++i) col[i] = hinge(x_feature[i], t, degree);
  return col;
}

}  // namespace satspline
