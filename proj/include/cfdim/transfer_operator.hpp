#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "cfdim/alphabet.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/potential.hpp"

namespace cfdim {

// Spectral evaluation of the pressure: the weighted transfer operator
//   (L phi)(x) = sum_{a in B} W(y_a) phi(y_a),   y_a = 1/(a + x),
// with one-step weight
//   W(y) = exp(-g_r(s) tau_min h(y)) * y^{2s}
// (the one-step log|T'|(y) is -2 log y), discretized by collocation on
// Chebyshev-Gauss-Lobatto points with barycentric interpolation. The leading
// eigenvalue lambda of the discretized operator gives P = log lambda.
//
// If the converged eigenvector is not strictly positive (a symptom of
// interpolation artifacts for rough weights), the operator is rebuilt with a
// piecewise-linear hat basis on a uniform grid, whose matrix is entrywise
// nonnegative; that fallback is reported in the result.

struct SpectralOptions {
  int collocation_points = 64;  // Lobatto nodes
  double tolerance = 1e-12;     // relative eigenvalue stagnation
  int max_iterations = 100000;
  bool allow_pl_fallback = true;
  int pl_grid = 513;  // nodes of the fallback hat basis
  std::size_t tau_grid = 10001;
};

struct SpectralResult {
  double log_lambda = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool used_pl_fallback = false;
};

namespace detail {

struct PowerIterationOutcome {
  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool positive = false;
};

// Power iteration on a dense row-major K x K matrix. Convergence requires at
// least three iterations and two consecutive relative eigenvalue changes
// below tol (a single small change can be a coincidence of the start
// vector, not stationarity).
inline PowerIterationOutcome power_iteration(const std::vector<double>& m,
                                             std::size_t k, double tol,
                                             int max_iterations) {
  PowerIterationOutcome out;
  std::vector<double> v(k, 1.0), u(k, 0.0);
  double lambda_prev = std::numeric_limits<double>::quiet_NaN();
  int stable = 0;
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      const double* row = &m[i * k];
      for (std::size_t j = 0; j < k; ++j) acc += row[j] * v[j];
      u[i] = acc;
    }
    double norm = 0.0;
    for (double x : u) norm = std::max(norm, std::abs(x));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw ConvergenceError("power iteration: iterate collapsed to zero");
    }
    for (std::size_t i = 0; i < k; ++i) v[i] = u[i] / norm;
    out.iterations = it + 1;
    const double rel = std::abs(norm - lambda_prev) /
                       std::max(std::abs(norm), 1e-300);
    if (it >= 2 && rel <= tol) {
      ++stable;
      if (stable >= 2) {
        out.lambda = norm;
        out.residual = rel;
        out.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    lambda_prev = norm;
    out.lambda = norm;
    out.residual = rel;
  }
  out.positive = true;
  for (double x : v) {
    if (!(x > 0.0)) {
      out.positive = false;
      break;
    }
  }
  return out;
}

}  // namespace detail

inline SpectralResult transfer_spectral_radius(const PotentialSpec& pot,
                                               double s, const Alphabet& B,
                                               const SpectralOptions& opts =
                                                   SpectralOptions{}) {
  validate_alphabet(B);
  if (!(s >= 0.0 && s <= 2.0)) {
    throw Error("transfer_spectral_radius: s must lie in [0,2]");
  }
  const std::size_t K = static_cast<std::size_t>(opts.collocation_points);
  if (K < 4) throw Error("transfer_spectral_radius: need >= 4 nodes");

  const double tm = tau_min(pot.tau, opts.tau_grid);
  const double gtm = tm == 0.0 ? 0.0 : growth_exponent(pot.r, s) * tm;
  auto weight = [&](double y) {
    return std::exp(-gtm * pot.h.eval(y) + 2.0 * s * std::log(y));
  };

  SpectralResult res;

  // ---- Chebyshev-Gauss-Lobatto collocation with barycentric rows.
  {
    std::vector<double> x(K), w(K);
    for (std::size_t i = 0; i < K; ++i) {
      x[i] = 0.5 * (1.0 + std::cos(static_cast<double>(i) *
                                   std::numbers::pi_v<double> /
                                   static_cast<double>(K - 1)));
      w[i] = ((i % 2 == 0) ? 1.0 : -1.0) *
             ((i == 0 || i == K - 1) ? 0.5 : 1.0);
    }
    std::vector<double> m(K * K, 0.0);
    std::vector<double> coef(K);
    for (std::size_t i = 0; i < K; ++i) {
      for (std::uint32_t a : B) {
        const double y = 1.0 / (static_cast<double>(a) + x[i]);
        const double wt = weight(y);
        // Barycentric interpolation coefficients of y on the nodes.
        std::ptrdiff_t exact = -1;
        for (std::size_t j = 0; j < K; ++j) {
          if (y == x[j]) {
            exact = static_cast<std::ptrdiff_t>(j);
            break;
          }
        }
        if (exact >= 0) {
          m[i * K + static_cast<std::size_t>(exact)] += wt;
          continue;
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < K; ++j) {
          coef[j] = w[j] / (y - x[j]);
          denom += coef[j];
        }
        for (std::size_t j = 0; j < K; ++j) {
          m[i * K + j] += wt * coef[j] / denom;
        }
      }
    }
    const auto po = detail::power_iteration(m, K, opts.tolerance,
                                            opts.max_iterations);
    if (po.converged && po.positive) {
      res.log_lambda = std::log(po.lambda);
      res.residual = po.residual;
      res.iterations = po.iterations;
      res.converged = true;
      return res;
    }
    if (!opts.allow_pl_fallback) {
      res.log_lambda = std::log(po.lambda);
      res.residual = po.residual;
      res.iterations = po.iterations;
      res.converged = false;
      return res;
    }
  }

  // ---- Piecewise-linear fallback on a uniform grid (nonnegative matrix).
  {
    const std::size_t G = static_cast<std::size_t>(opts.pl_grid);
    std::vector<double> m(G * G, 0.0);
    for (std::size_t i = 0; i < G; ++i) {
      const double xi =
          static_cast<double>(i) / static_cast<double>(G - 1);
      for (std::uint32_t a : B) {
        const double y = 1.0 / (static_cast<double>(a) + xi);
        const double wt = weight(y);
        const double t = y * static_cast<double>(G - 1);
        std::size_t j = static_cast<std::size_t>(t);
        if (j >= G - 1) {
          m[i * G + (G - 1)] += wt;
        } else {
          const double frac = t - static_cast<double>(j);
          m[i * G + j] += wt * (1.0 - frac);
          m[i * G + j + 1] += wt * frac;
        }
      }
    }
    const auto po = detail::power_iteration(m, G, opts.tolerance,
                                            opts.max_iterations);
    res.log_lambda = std::log(po.lambda);
    res.residual = po.residual;
    res.iterations = po.iterations;
    res.converged = po.converged && po.positive;
    res.used_pl_fallback = true;
    return res;
  }
}

}  // namespace cfdim
