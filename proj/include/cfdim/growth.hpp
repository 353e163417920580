#pragma once

#include <cmath>
#include <cstdint>

#include "cfdim/errors.hpp"

namespace cfdim {

// Growth-exponent family g_r(s), r >= 1:
//   g_1(s) = s,   g_r(s) = s * g_{r-1}(s) / (1 - s + g_{r-1}(s)).
// Closed form g_r(s) = s^r (2s-1) / (s^r - (1-s)^r), with the removable
// singularity g_r(1/2) = 1/(2r). The natural domain is s in (0,1]; the
// evaluators additionally accept the closure [0,2] (with g_r(0) = 0, and the
// direct closed form above 1) so that root brackets can straddle it.

inline void validate_growth_args(int r, double s) {
  if (r < 1) throw Error("growth exponent: r must be a positive integer");
  if (!(s >= 0.0 && s <= 2.0)) {
    throw Error("growth exponent: s must lie in [0,2]");
  }
}

// Reference evaluation by the defining recursion (reliable on (0,1]).
inline double growth_exponent_recursive(int r, double s) {
  validate_growth_args(r, s);
  if (s == 0.0) return 0.0;
  double g = s;
  for (int k = 2; k <= r; ++k) {
    g = s * g / (1.0 - s + g);
  }
  return g;
}

// Closed-form evaluation, written to avoid cancellation: on (0,1] the
// denominator s^r - (1-s)^r is computed as -s^r * expm1(r * log1p((1-2s)/s)).
inline double growth_exponent_closed(int r, double s) {
  validate_growth_args(r, s);
  if (r == 1) return s;
  if (s == 0.0) return 0.0;
  if (std::abs(s - 0.5) < 1e-9) {
    return 1.0 / (2.0 * static_cast<double>(r));
  }
  if (s > 1.0) {
    // Far from the s = 1/2 cancellation; the direct form is stable here.
    const double num = std::pow(s, r) * (2.0 * s - 1.0);
    const double den = std::pow(s, r) - std::pow(1.0 - s, r);
    return num / den;
  }
  const double u = static_cast<double>(r) * std::log1p((1.0 - 2.0 * s) / s);
  return (2.0 * s - 1.0) / (-std::expm1(u));
}

// Preferred entry point (the stable closed form).
inline double growth_exponent(int r, double s) {
  return growth_exponent_closed(r, s);
}

}  // namespace cfdim
