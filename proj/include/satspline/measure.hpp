#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "satspline/error.hpp"

namespace satspline {

inline constexpr double kDefaultPruneThreshold = 1e-10;
inline constexpr double kMassTolerance = 1e-9;

struct Atom {
  double t = 0.0;  // knot location
  double w = 0.0;  // signed weight

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Hinge basis of the given degree: (x - t)_+^degree, degree in {1, 2}.
inline double hinge(double x, double t, int degree) {
  const double r = x - t;
  if (r <= 0.0) return 0.0;
  return degree == 2 ? r * r : r;
}

// A finite signed measure sum_j w_j delta_{t_j} on [0,1]; the (distributional)
// second derivative of a degree-one fit. Locations are kept sorted and unique.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;

  // Sorts by location and merges exact duplicates by summing weights.
  explicit AtomicMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const Atom& a : atoms_) {
      require(std::isfinite(a.t) && std::isfinite(a.w), "atom with non-finite location or weight");
      require(a.t >= 0.0 && a.t <= 1.0, "atom location outside [0,1]");
    }
    normalize();
  }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  double total_mass() const {
    double s = 0.0;
    for (const Atom& a : atoms_) s += a.w;
    return s;
  }

  double l1_norm() const {
    double s = 0.0;
    for (const Atom& a : atoms_) s += std::abs(a.w);
    return s;
  }

  // f_mu(x) without offset: sum_j w_j (x - t_j)_+^degree.
  double integrate(double x, int degree = 1) const {
    double s = 0.0;
    for (const Atom& a : atoms_) {
      if (x <= a.t) break;  // sorted: remaining hinges vanish
      s += a.w * hinge(x, a.t, degree);
    }
    return s;
  }

  // alpha * this + beta * other, atoms merged.
  AtomicMeasure combine(double alpha, const AtomicMeasure& other, double beta) const {
    std::vector<Atom> out;
    out.reserve(atoms_.size() + other.atoms_.size());
    for (const Atom& a : atoms_) out.push_back({a.t, alpha * a.w});
    for (const Atom& a : other.atoms_) out.push_back({a.t, beta * a.w});
    return AtomicMeasure(std::move(out));
  }

  friend bool operator==(const AtomicMeasure&, const AtomicMeasure&) = default;

 private:
  void normalize() {
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& a, const Atom& b) { return a.t < b.t; });
    std::vector<Atom> merged;
    merged.reserve(atoms_.size());
    for (const Atom& a : atoms_) {
      if (!merged.empty() && merged.back().t == a.t) {
        merged.back().w += a.w;
      } else {
        merged.push_back(a);
      }
    }
    atoms_ = std::move(merged);
  }

  std::vector<Atom> atoms_;
};

// c + sum_j w_j (x - t_j)_+^degree. Defined for every real x.
inline double eval_spline(const AtomicMeasure& measure, double c, double x, int degree = 1) {
  return c + measure.integrate(x, degree);
}

// Drops atoms with |w| < threshold after merging duplicates. The mass carried
// by dropped atoms is moved onto the heaviest survivor, so total mass is
// preserved and the l1 norm never grows.
inline AtomicMeasure prune(const AtomicMeasure& measure, double threshold = kDefaultPruneThreshold) {
  require(threshold >= 0.0, "prune threshold must be non-negative");
  std::vector<Atom> kept;
  double dropped = 0.0;
  for (const Atom& a : measure.atoms()) {
    if (std::abs(a.w) < threshold || a.w == 0.0) {
      dropped += a.w;
    } else {
      kept.push_back(a);
    }
  }
  if (!kept.empty() && dropped != 0.0) {
    auto heaviest = std::max_element(kept.begin(), kept.end(), [](const Atom& a, const Atom& b) {
      return std::abs(a.w) < std::abs(b.w);
    });
    heaviest->w += dropped;
  }
  return AtomicMeasure(std::move(kept));
}

}  // namespace satspline
