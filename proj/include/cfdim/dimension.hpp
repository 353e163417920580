#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cfdim/alphabet.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/pressure.hpp"
#include "cfdim/transfer_operator.hpp"

namespace cfdim {

struct RootResult {
  double root = std::numeric_limits<double>::quiet_NaN();
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Bisection for a strictly decreasing function phi on [lo,hi] with
// phi(root) = 0. Endpoint zeros short-circuit; a missing sign change is an
// error. Brackets shrink monotonically and are reported.
template <typename Phi>
RootResult bisect_decreasing(Phi&& phi, double lo, double hi, double tol,
                             int max_iterations = 200) {
  double flo = phi(lo);
  double fhi = phi(hi);
  RootResult out;
  if (flo == 0.0) {
    out.root = lo;
    out.bracket_lo = out.bracket_hi = lo;
    out.converged = true;
    return out;
  }
  if (fhi == 0.0) {
    out.root = hi;
    out.bracket_lo = out.bracket_hi = hi;
    out.converged = true;
    return out;
  }
  if (!(flo > 0.0) || !(fhi < 0.0)) {
    throw ConvergenceError(
        "bisection: no sign change on the bracket [" + std::to_string(lo) +
        ", " + std::to_string(hi) + "]");
  }
  int it = 0;
  while (hi - lo > tol && it < max_iterations) {
    const double mid = 0.5 * (lo + hi);
    const double fm = phi(mid);
    if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++it;
  }
  out.root = 0.5 * (lo + hi);
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.iterations = it;
  out.converged = hi - lo <= tol;
  if (!out.converged) {
    throw ConvergenceError("bisection: bracket did not shrink to tolerance");
  }
  return out;
}

}  // namespace detail

enum class FnRootMode {
  kPlain,       // solve f_n(s) = 1
  kStationary,  // solve f_n(s) = f_{n-1}(s): depth-bias cancels and the root
                // converges geometrically to the pressure root
};

// Root of the finite-depth equation in s over the bracket [0,2].
inline RootResult solve_fn_root(const PotentialSpec& pot, const Alphabet& B,
                                int n, FnRootMode mode = FnRootMode::kPlain,
                                double tol = 1e-8,
                                const BruteOptions& opts = BruteOptions{}) {
  validate_alphabet(B);
  if (mode == FnRootMode::kStationary && n < 2) {
    throw Error("solve_fn_root: stationary mode needs depth >= 2");
  }
  auto phi = [&](double s) {
    const BruteTable t = brute_log_table(pot, B, n, {s}, opts);
    return mode == FnRootMode::kPlain ? t.log_f(n) : t.delta(n);
  };
  return detail::bisect_decreasing(phi, 0.0, 2.0, tol);
}

// Root of the spectral pressure in s over the bracket [0,2].
inline RootResult solve_pressure_root(const PotentialSpec& pot,
                                      const Alphabet& B, double tol = 1e-6,
                                      const SpectralOptions& sopts =
                                          SpectralOptions{}) {
  validate_alphabet(B);
  auto phi = [&](double s) {
    const SpectralResult r = transfer_spectral_radius(pot, s, B, sopts);
    if (!r.converged) {
      throw ConvergenceError("solve_pressure_root: spectral evaluation did "
                             "not converge at s = " + std::to_string(s));
    }
    return r.log_lambda;
  };
  return detail::bisect_decreasing(phi, 0.0, 2.0, tol);
}

// Root of g_r(s) * c + s = 1 on [0,1]: the closed-form limit value the
// truncated systems approach from below (c >= 0).
inline double closed_form_oracle(int r, double c, double tol = 1e-12) {
  if (c < 0.0) throw Error("closed_form_oracle: c must be >= 0");
  auto phi = [&](double s) { return 1.0 - (growth_exponent(r, s) * c + s); };
  // phi is strictly decreasing from 1 to -c; reuse the decreasing bisector.
  const RootResult res = detail::bisect_decreasing(phi, 0.0, 1.0, tol, 300);
  return res.root;
}

// Monotone sweep of truncated-system dimensions s_M for M in Ms. The
// certified output is the largest computed s_M (a lower bound for the
// increasing limit); the extrapolated value fits the 1/M truncation tail
// through the last two sweep points and is heuristic by nature.
struct LimitSweep {
  std::vector<int> Ms;
  std::vector<RootResult> roots;
  double certified_lower_bound = 0.0;
  double extrapolated = 0.0;
  bool extrapolated_is_heuristic = true;
};

inline LimitSweep solve_limit(const PotentialSpec& pot,
                              const std::vector<int>& Ms, double tol = 1e-6,
                              const SpectralOptions& sopts =
                                  SpectralOptions{}) {
  if (Ms.empty()) throw Error("solve_limit: empty M sweep");
  LimitSweep sweep;
  int prev_m = 0;
  double prev_s = -std::numeric_limits<double>::infinity();
  for (int M : Ms) {
    if (M <= prev_m) throw Error("solve_limit: Ms must be increasing");
    const RootResult r =
        solve_pressure_root(pot, alphabet_range(1, M), tol, sopts);
    // The truncated dimensions increase with M; allow only solver noise.
    if (r.root < prev_s - 10.0 * tol) {
      throw MonotonicityError(
          "solve_limit: s_M decreased between M = " + std::to_string(prev_m) +
          " and M = " + std::to_string(M));
    }
    sweep.Ms.push_back(M);
    sweep.roots.push_back(r);
    prev_m = M;
    prev_s = r.root;
  }
  sweep.certified_lower_bound = sweep.roots.back().root;
  if (sweep.roots.size() >= 2) {
    const double s1 = sweep.roots[sweep.roots.size() - 2].root;
    const double s2 = sweep.roots.back().root;
    const double m1 = sweep.Ms[sweep.Ms.size() - 2];
    const double m2 = sweep.Ms.back();
    // s_M ~ s_inf - C/M  =>  s_inf = s2 + (s2 - s1) * m1 / (m2 - m1).
    sweep.extrapolated = s2 + (s2 - s1) * m1 / (m2 - m1);
  } else {
    sweep.extrapolated = sweep.certified_lower_bound;
  }
  sweep.extrapolated_is_heuristic = true;
  return sweep;
}

}  // namespace cfdim
