#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "cfdim/continued_fraction.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/function_spec.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/word.hpp"

namespace cfdim {

// A weighted potential family: the weight attached to a depth-n word at
// parameter s is
//   exp(psi) = exp(-g_r(s) * tau_min * S_n h(z)) * q_n^{-2s},
// where z is the word's cylinder anchor p_n/q_n, S_n is the Birkhoff sum
// along the anchor orbit, and tau_min is the minimum of tau over [0,1].
struct PotentialSpec {
  int r = 1;
  FunctionSpec h = FunctionSpec::log_t();
  FunctionSpec tau = FunctionSpec::constant(0.0);
};

// Minimum of a function over a uniform closed grid on [0,1]. Evaluation
// failures at a grid point propagate with their location.
inline double tau_min(const FunctionSpec& tau, std::size_t grid_size = 10001) {
  if (grid_size < 2) throw Error("tau_min: grid must have at least 2 points");
  if (tau.is_const()) return tau.const_value();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x =
        static_cast<double>(i) / static_cast<double>(grid_size - 1);
    best = std::min(best, tau.eval(x));
  }
  return best;
}

// Anchor orbit of a word: x_k = value of the suffix (a_{k+1},...,a_n), so
// x_0 is the anchor itself and T(x_k) = x_{k+1} exactly. Computed by the
// backward recurrence x_k = 1 / (a_{k+1} + x_{k+1}) from x_n = 0.
inline std::vector<double> orbit_points(const Word& w) {
  std::vector<double> xs(w.size());
  double x = 0.0;
  for (std::size_t i = w.size(); i-- > 0;) {
    x = 1.0 / (to_double(BigRat(w[i])) + x);
    xs[i] = x;
  }
  return xs;
}

// Birkhoff sum S_n f at the word's anchor. For f = log|T'| the sum
// telescopes exactly to 2 log q_n; constants sum to n*c; expressions are
// evaluated along the orbit.
inline double ergodic_sum(const FunctionSpec& f, const Word& w) {
  validate_word(w);
  if (f.is_log_t()) return derivative_product(w);
  if (f.is_const()) {
    return static_cast<double>(w.size()) * f.const_value();
  }
  double s = 0.0;
  for (double x : orbit_points(w)) s += f.eval(x);
  return s;
}

// log of the word's weight at parameter s (see PotentialSpec).
inline double psi_eval(const PotentialSpec& pot, const Word& w, double s,
                       double tau_min_value) {
  const double g = growth_exponent(pot.r, s);
  const double hsum = ergodic_sum(pot.h, w);
  const double lq = log_big(convergents(w).qn());
  return -g * tau_min_value * hsum - 2.0 * s * lq;
}

inline double psi_eval(const PotentialSpec& pot, const Word& w, double s) {
  return psi_eval(pot, w, s, tau_min(pot.tau));
}

// When h is log|T'| or a constant the weight collapses to a pure power of
// q_n times a per-step constant factor:
//   exp(psi) = exp(n * step_log) * q_n^{-2 sigma_eff}.
struct CollapsedWeight {
  double sigma_eff = 0.0;
  double step_log = 0.0;  // additive log-contribution per digit
};

inline std::optional<CollapsedWeight> sigma_collapse(const PotentialSpec& pot,
                                                     double s,
                                                     double tau_min_value) {
  const double g = growth_exponent(pot.r, s);
  if (pot.h.is_log_t()) {
    return CollapsedWeight{s + g * tau_min_value, 0.0};
  }
  if (pot.h.is_const()) {
    return CollapsedWeight{s, -g * tau_min_value * pot.h.const_value()};
  }
  return std::nullopt;
}

// Variation diagnostic: var[k-1] estimates Var_k(f), the largest oscillation
// of f over depth-k cylinders of the bounded-digit family {1..max_digit},
// from `samples` interior sample points per cylinder. `tempered` reports
// whether the profile is finite and decays (last <= half of first, or
// identically zero).
struct VariationProfile {
  std::vector<double> var;
  bool tempered = false;
};

inline VariationProfile variation_profile(const FunctionSpec& f, int depth,
                                          int samples, int max_digit = 8) {
  if (depth < 1) throw Error("variation_profile: depth must be >= 1");
  if (samples < 2) throw Error("variation_profile: need >= 2 samples");
  VariationProfile out;
  out.var.assign(depth, 0.0);
  Word w;
  // Depth-first enumeration of all words over {1..max_digit} up to `depth`,
  // accumulating each level's maximal sampled oscillation.
  auto rec = [&](auto&& self) -> void {
    const std::size_t k = w.size();
    if (k >= 1) {
      const Cylinder cyl = cylinder(w);
      const double lo = to_double(cyl.lo);
      const double width = to_double(cyl.length());
      double fmin = std::numeric_limits<double>::infinity();
      double fmax = -fmin;
      for (int j = 0; j < samples; ++j) {
        const double x = lo + (j + 0.5) * width / samples;
        const double v = f.eval(x);
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
      }
      out.var[k - 1] = std::max(out.var[k - 1], fmax - fmin);
    }
    if (k == static_cast<std::size_t>(depth)) return;
    for (int a = 1; a <= max_digit; ++a) {
      w.emplace_back(a);
      self(self);
      w.pop_back();
    }
  };
  rec(rec);
  const double first = out.var.front();
  const double last = out.var.back();
  out.tempered = std::isfinite(first) && std::isfinite(last) &&
                 (last <= 0.5 * first || (first == 0.0 && last == 0.0));
  return out;
}

}  // namespace cfdim
