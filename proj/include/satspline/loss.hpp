#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "satspline/error.hpp"

namespace satspline {

enum class LossKind { Square, Logistic, PseudoHuber };

inline constexpr double kDefaultHuberDelta = 0.0015;

// Pointwise convex loss l(z, y) in the fitted value z.
struct LossSpec {
  LossKind kind = LossKind::Square;
  double delta = kDefaultHuberDelta;  // pseudo-Huber only

  static LossSpec square() { return {LossKind::Square, kDefaultHuberDelta}; }
  static LossSpec logistic() { return {LossKind::Logistic, kDefaultHuberDelta}; }
  static LossSpec pseudo_huber(double delta = kDefaultHuberDelta) {
    require(delta > 0.0 && std::isfinite(delta), "pseudo-Huber delta must be positive");
    return {LossKind::PseudoHuber, delta};
  }

  friend bool operator==(const LossSpec& a, const LossSpec& b) {
    return a.kind == b.kind && (a.kind != LossKind::PseudoHuber || a.delta == b.delta);
  }
};

inline std::string loss_name(LossKind k) {
  switch (k) {
    case LossKind::Square: return "square";
    case LossKind::Logistic: return "logistic";
    case LossKind::PseudoHuber: return "pseudo_huber";
  }
  return "square";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "square") return LossKind::Square;
  if (s == "logistic") return LossKind::Logistic;
  if (s == "pseudo_huber" || s == "pseudo-huber") return LossKind::PseudoHuber;
  throw InvalidInput("unknown loss kind '" + s + "'");
}

namespace detail {

inline void check_label(const LossSpec& spec, double y) {
  if (spec.kind == LossKind::Logistic && y != 1.0 && y != -1.0)
    throw InvalidInput("logistic loss requires labels in {-1, +1}");
}

// 1 / (1 + exp(-m)) without overflow.
inline double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

}  // namespace detail

inline double loss_value(const LossSpec& spec, double z, double y) {
  detail::check_label(spec, y);
  switch (spec.kind) {
    case LossKind::Square: {
      const double u = z - y;
      return 0.5 * u * u;
    }
    case LossKind::Logistic: {
      const double m = z * y;
      return std::max(0.0, -m) + std::log1p(std::exp(-std::abs(m)));
    }
    case LossKind::PseudoHuber: {
      const double u = z - y;
      const double r = u * u / spec.delta;
      // delta * (sqrt(1 + r) - 1), rewritten to avoid cancellation near u = 0
      return spec.delta * r / (std::sqrt(1.0 + r) + 1.0);
    }
  }
  return 0.0;
}

inline double loss_grad(const LossSpec& spec, double z, double y) {
  detail::check_label(spec, y);
  switch (spec.kind) {
    case LossKind::Square: return z - y;
    case LossKind::Logistic: return -y * detail::sigmoid(-z * y);
    case LossKind::PseudoHuber: {
      const double u = z - y;
      return u / std::sqrt(1.0 + u * u / spec.delta);
    }
  }
  return 0.0;
}

inline double loss_hess(const LossSpec& spec, double z, double y) {
  detail::check_label(spec, y);
  switch (spec.kind) {
    case LossKind::Square: return 1.0;
    case LossKind::Logistic: {
      const double p = detail::sigmoid(z * y);
      return p * (1.0 - p);
    }
    case LossKind::PseudoHuber: {
      const double u = z - y;
      const double s = 1.0 + u * u / spec.delta;
      return 1.0 / (s * std::sqrt(s));
    }
  }
  return 0.0;
}

// Unnormalized data-fit L = sum_i l(fitted_i, y_i) and its gradient in fitted values.
inline std::pair<double, std::vector<double>> objective_and_gradient(const LossSpec& spec,
                                                                     std::span<const double> fitted,
                                                                     std::span<const double> y) {
  require(fitted.size() == y.size(), "fitted/response length mismatch");
  std::pair<double, std::vector<double>> out{0.0, std::vector<double>(y.size())};
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.first += loss_value(spec, fitted[i], y[i]);
    out.second[i] = loss_grad(spec, fitted[i], y[i]);
  }
  return out;
}

inline double objective(const LossSpec& spec, std::span<const double> fitted, std::span<const double> y) {
  require(fitted.size() == y.size(), "fitted/response length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += loss_value(spec, fitted[i], y[i]);
  return s;
}

inline void validate_labels(const LossSpec& spec, std::span<const double> y) {
  if (spec.kind != LossKind::Logistic) return;
  for (double v : y)
    if (v != 1.0 && v != -1.0)
      throw InvalidInput("logistic loss requires labels in {-1, +1}; remap {0,1} labels with y -> 2y - 1");
}

// argmin_c sum_i l(c, y_i) by safeguarded Newton on a convex scalar function.
inline double best_constant(const LossSpec& spec, std::span<const double> y) {
  require(!y.empty(), "best constant of empty data");
  validate_labels(spec, y);
  double c = 0.0;
  for (double v : y) c += v;
  c /= static_cast<double>(y.size());
  if (spec.kind == LossKind::Square) return c;
  if (spec.kind == LossKind::Logistic) {
    double pos = 0.0;
    for (double v : y) pos += v > 0 ? 1.0 : 0.0;
    const double n = static_cast<double>(y.size());
    if (pos == 0.0 || pos == n) return pos == 0.0 ? -30.0 : 30.0;  // separable: saturate
    return std::log(pos / (n - pos));
  }
  // Pseudo-Huber: Newton from the mean, halving on any objective increase.
  auto obj = [&](double v) {
    double s = 0.0;
    for (double yi : y) s += loss_value(spec, v, yi);
    return s;
  };
  double f = obj(c);
  for (int it = 0; it < 200; ++it) {
    double g = 0.0, h = 0.0;
    for (double yi : y) {
      g += loss_grad(spec, c, yi);
      h += loss_hess(spec, c, yi);
    }
    if (std::abs(g) <= 1e-14 * static_cast<double>(y.size())) break;
    double step = g / h;
    double next = c - step;
    double fn = obj(next);
    int halvings = 0;
    while (fn > f && halvings < 60) {
      step *= 0.5;
      next = c - step;
      fn = obj(next);
      ++halvings;
    }
    if (fn > f) break;
    const bool done = std::abs(next - c) <= 1e-15 * (1.0 + std::abs(c));
    c = next;
    f = fn;
    if (done) break;
  }
  return c;
}

}  // namespace satspline
