#pragma once

#include "cfdim/simd_math.hpp"  // first: SIMD declarations for the kernels

#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cfdim/alphabet.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/potential.hpp"
#include "cfdim/transfer_operator.hpp"

namespace cfdim {

struct BruteOptions {
  double budget = 1e8;  // max admissible number of enumerated words
  bool force = false;   // run even if over budget
  int threads = 1;
  std::size_t tau_grid = 10001;
};

// Exact finite-depth partition sums
//   f_n(s) = sum_{words in B^n} exp(-g_r(s) tau_min S_n h(z)) q_n^{-2s}
// for all depths n <= n_max and a batch of s values, sharing one enumeration.
struct BruteTable {
  int n_max = 0;
  std::vector<double> svalues;
  double tau_min_value = 0.0;
  std::vector<std::vector<double>> log_fn;  // log_fn[n-1][si] = log f_n

  double log_f(int n, std::size_t si = 0) const {
    return log_fn.at(static_cast<std::size_t>(n) - 1).at(si);
  }
  // Raw per-depth average (1/n) log f_n.
  double average(int n, std::size_t si = 0) const {
    return log_f(n, si) / static_cast<double>(n);
  }
  // Difference estimator log f_n - log f_{n-1}; its finite-depth bias decays
  // geometrically instead of like 1/n.
  double delta(int n, std::size_t si = 0) const {
    if (n < 2) throw Error("BruteTable::delta needs n >= 2");
    return log_f(n, si) - log_f(n - 1, si);
  }
};

namespace detail {

inline constexpr int kBruteBuf = 4096;

// Enumerates every word over B of length lo..n extending a fixed prefix of
// length lo-1 whose trailing continuants are q_prev = q_{lo-1} and
// q_prev2 = q_{lo-2}. For each enumerated node at level e the continuant
// q_e is produced exactly once. Level-e contributions q_e^{msig[si]} are
// accumulated into sums[e][si] via batched log/exp (auto-vectorizable).
inline void collapsed_subtree(const Alphabet& B, int lo, int n, double q_prev,
                              double q_prev2,
                              const std::vector<double>& msig,
                              std::vector<std::vector<double>>& sums) {
  const std::size_t S = msig.size();
  const int A = static_cast<int>(B.size());
  std::vector<int> idx(static_cast<std::size_t>(n) + 1, 0);
  std::vector<double> q(static_cast<std::size_t>(n) + 1);
  std::vector<double> qp(static_cast<std::size_t>(n) + 1);
  std::vector<std::vector<double>> buf(
      static_cast<std::size_t>(n) + 1, std::vector<double>(kBruteBuf));
  std::vector<int> fill(static_cast<std::size_t>(n) + 1, 0);
  std::vector<double> lbuf(kBruteBuf), ebuf(kBruteBuf);

  auto flush = [&](int lvl) {
    const int f = fill[lvl];
    if (f == 0) return;
    const double* __restrict qb = buf[lvl].data();
    double* __restrict lb = lbuf.data();
    double* __restrict eb = ebuf.data();
    for (int i = 0; i < f; ++i) lb[i] = ::log(qb[i]);
    for (std::size_t si = 0; si < S; ++si) {
      const double mm = msig[si];
      for (int i = 0; i < f; ++i) eb[i] = ::exp(mm * lb[i]);
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      int i = 0;
      for (; i + 4 <= f; i += 4) {
        s0 += eb[i];
        s1 += eb[i + 1];
        s2 += eb[i + 2];
        s3 += eb[i + 3];
      }
      for (; i < f; ++i) s0 += eb[i];
      sums[lvl][si] += (s0 + s1) + (s2 + s3);
    }
    fill[lvl] = 0;
  };
  auto push = [&](int lvl, double qv) {
    buf[lvl][fill[lvl]++] = qv;
    if (fill[lvl] == kBruteBuf) flush(lvl);
  };

  q[lo - 1] = q_prev;
  qp[lo - 1] = q_prev2;
  for (int e = lo; e <= n; ++e) {
    q[e] = static_cast<double>(B[0]) * q[e - 1] + qp[e - 1];
    qp[e] = q[e - 1];
    push(e, q[e]);
  }
  if (lo <= n) {
    for (;;) {
      int d = n;
      while (d >= lo && idx[d] == A - 1) {
        idx[d] = 0;
        --d;
      }
      if (d < lo) break;
      ++idx[d];
      for (int e = d; e <= n; ++e) {
        q[e] = static_cast<double>(B[idx[e]]) * q[e - 1] + qp[e - 1];
        qp[e] = q[e - 1];
        push(e, q[e]);
      }
    }
  }
  for (int lvl = lo; lvl <= n; ++lvl) flush(lvl);
}

// Same enumeration, for potentials whose h must be evaluated pointwise.
// Words are built by prepending digits; by the continuant reversal symmetry
// the recurrence for q is unchanged and the current word's anchor is
// q_{e-1}/q_e, so the Birkhoff sum H_e = H_{e-1} + h(q_{e-1}/q_e) tracks
// S_e h at the anchor exactly. Level-e contributions
// exp(cg[si] * H_e + msig[si] * log q_e) go into sums[e][si].
inline void generic_subtree(const Alphabet& B, int lo, int n, double q_prev,
                            double q_prev2, double h_prev,
                            const FunctionSpec& h,
                            const std::vector<double>& msig,
                            const std::vector<double>& cg,
                            std::vector<std::vector<double>>& sums) {
  const std::size_t S = msig.size();
  const int A = static_cast<int>(B.size());
  std::vector<int> idx(static_cast<std::size_t>(n) + 1, 0);
  std::vector<double> q(static_cast<std::size_t>(n) + 1);
  std::vector<double> qp(static_cast<std::size_t>(n) + 1);
  std::vector<double> hsum(static_cast<std::size_t>(n) + 1);
  std::vector<std::vector<double>> bufq(
      static_cast<std::size_t>(n) + 1, std::vector<double>(kBruteBuf));
  std::vector<std::vector<double>> bufh(
      static_cast<std::size_t>(n) + 1, std::vector<double>(kBruteBuf));
  std::vector<int> fill(static_cast<std::size_t>(n) + 1, 0);
  std::vector<double> lbuf(kBruteBuf), ebuf(kBruteBuf);

  auto flush = [&](int lvl) {
    const int f = fill[lvl];
    if (f == 0) return;
    const double* __restrict qb = bufq[lvl].data();
    const double* __restrict hb = bufh[lvl].data();
    double* __restrict lb = lbuf.data();
    double* __restrict eb = ebuf.data();
    for (int i = 0; i < f; ++i) lb[i] = ::log(qb[i]);
    for (std::size_t si = 0; si < S; ++si) {
      const double mm = msig[si];
      const double cc = cg[si];
      for (int i = 0; i < f; ++i) eb[i] = ::exp(cc * hb[i] + mm * lb[i]);
      double acc = 0.0;
      for (int i = 0; i < f; ++i) acc += eb[i];
      sums[lvl][si] += acc;
    }
    fill[lvl] = 0;
  };
  auto push = [&](int lvl, double qv, double hv) {
    bufq[lvl][fill[lvl]] = qv;
    bufh[lvl][fill[lvl]] = hv;
    if (++fill[lvl] == kBruteBuf) flush(lvl);
  };

  q[lo - 1] = q_prev;
  qp[lo - 1] = q_prev2;
  hsum[lo - 1] = h_prev;
  for (int e = lo; e <= n; ++e) {
    q[e] = static_cast<double>(B[0]) * q[e - 1] + qp[e - 1];
    qp[e] = q[e - 1];
    hsum[e] = hsum[e - 1] + h.eval(q[e - 1] / q[e]);
    push(e, q[e], hsum[e]);
  }
  if (lo <= n) {
    for (;;) {
      int d = n;
      while (d >= lo && idx[d] == A - 1) {
        idx[d] = 0;
        --d;
      }
      if (d < lo) break;
      ++idx[d];
      for (int e = d; e <= n; ++e) {
        q[e] = static_cast<double>(B[idx[e]]) * q[e - 1] + qp[e - 1];
        qp[e] = q[e - 1];
        hsum[e] = hsum[e - 1] + h.eval(q[e - 1] / q[e]);
        push(e, q[e], hsum[e]);
      }
    }
  }
  for (int lvl = lo; lvl <= n; ++lvl) flush(lvl);
}

}  // namespace detail

inline BruteTable brute_log_table(const PotentialSpec& pot, const Alphabet& B,
                                  int n_max, std::vector<double> svalues,
                                  const BruteOptions& opts = BruteOptions{}) {
  validate_alphabet(B);
  if (n_max < 1) throw Error("brute_log_table: depth must be >= 1");
  if (svalues.empty()) throw Error("brute_log_table: no s values");
  for (double s : svalues) {
    if (!(s >= 0.0 && s <= 2.0)) {
      throw Error("brute_log_table: s must lie in [0,2]");
    }
  }

  // Work estimate: total enumerated words across all depths.
  {
    double work = 0.0, p = 1.0;
    for (int k = 1; k <= n_max; ++k) {
      p *= static_cast<double>(B.size());
      work += p;
      if (work > opts.budget && !opts.force) {
        throw BudgetError(
            "enumeration of " + std::to_string(work) + " words exceeds the " +
            "budget of " + std::to_string(opts.budget) +
            " (pass force to run anyway)");
      }
    }
  }

  BruteTable table;
  table.n_max = n_max;
  table.svalues = svalues;
  table.tau_min_value = tau_min(pot.tau, opts.tau_grid);
  const double tm = table.tau_min_value;
  const std::size_t S = svalues.size();

  // Per-s collapse parameters (when h admits them).
  std::vector<double> msig(S), step_log(S, 0.0), cg(S, 0.0);
  const bool collapsible = pot.h.is_log_t() || pot.h.is_const();
  for (std::size_t si = 0; si < S; ++si) {
    const double s = svalues[si];
    const double gtm = tm == 0.0 ? 0.0 : growth_exponent(pot.r, s) * tm;
    if (collapsible) {
      const auto cw = sigma_collapse(pot, s, tm);
      msig[si] = -2.0 * cw->sigma_eff;
      step_log[si] = cw->step_log;
    } else {
      msig[si] = -2.0 * s;
      cg[si] = -gtm;
    }
  }

  // One job per first digit; each job also owns its level-1 node. Jobs are
  // assigned to threads round-robin and merged in job order, so results are
  // bit-identical for every thread count.
  const std::size_t jobs = B.size();
  std::vector<std::vector<std::vector<double>>> job_sums(
      jobs, std::vector<std::vector<double>>(
                static_cast<std::size_t>(n_max) + 1,
                std::vector<double>(S, 0.0)));

  auto run_job = [&](std::size_t j) {
    auto& sums = job_sums[j];
    const double q1 = static_cast<double>(B[j]);
    if (collapsible) {
      for (std::size_t si = 0; si < S; ++si) {
        sums[1][si] += std::exp(msig[si] * std::log(q1));
      }
      if (n_max >= 2) {
        detail::collapsed_subtree(B, 2, n_max, q1, 1.0, msig, sums);
      }
    } else {
      const double h1 = pot.h.eval(1.0 / q1);
      for (std::size_t si = 0; si < S; ++si) {
        sums[1][si] += std::exp(cg[si] * h1 + msig[si] * std::log(q1));
      }
      if (n_max >= 2) {
        detail::generic_subtree(B, 2, n_max, q1, 1.0, h1, pot.h, msig, cg,
                                sums);
      }
    }
  };

  const int T = std::max(1, opts.threads);
  if (T == 1 || jobs == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run_job(j);
  } else {
    std::vector<std::thread> pool;
    const std::size_t workers = std::min<std::size_t>(T, jobs);
    pool.reserve(workers);
    std::exception_ptr err;
    std::mutex err_mu;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t j = t; j < jobs; j += workers) run_job(j);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  // Ordered merge, then to logs.
  table.log_fn.assign(static_cast<std::size_t>(n_max),
                      std::vector<double>(S, 0.0));
  for (int lvl = 1; lvl <= n_max; ++lvl) {
    for (std::size_t si = 0; si < S; ++si) {
      double total = 0.0;
      for (std::size_t j = 0; j < jobs; ++j) {
        total += job_sums[j][lvl][si];
      }
      table.log_fn[lvl - 1][si] =
          std::log(total) + static_cast<double>(lvl) * step_log[si];
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

struct PressureEstimate {
  double value = std::numeric_limits<double>::quiet_NaN();
  std::string method;  // "brute" | "spectral" | "spectral-pl"
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::vector<double> sequence;  // (1/k) log f_k for k = 1..n (brute only)
  std::vector<std::pair<std::string, double>> params;
};

// Finite-depth estimate of the pressure. `value` is the difference
// estimator log f_n - log f_{n-1}, whose bias decays geometrically in n;
// `sequence` carries the raw averages (1/k) log f_k, whose O(1/n) bias makes
// them unsuitable as the headline value but useful as a diagnostic trace.
inline PressureEstimate pressure_brute(const PotentialSpec& pot, double s,
                                       const Alphabet& B, int n_max,
                                       const BruteOptions& opts =
                                           BruteOptions{}) {
  const BruteTable t = brute_log_table(pot, B, n_max, {s}, opts);
  PressureEstimate est;
  est.method = "brute";
  est.sequence.reserve(static_cast<std::size_t>(n_max));
  for (int k = 1; k <= n_max; ++k) est.sequence.push_back(t.average(k));
  est.value = n_max >= 2 ? t.delta(n_max) : t.average(1);
  est.residual = n_max >= 3
                     ? std::abs(t.delta(n_max) - t.delta(n_max - 1))
                     : std::numeric_limits<double>::infinity();
  est.converged = std::isfinite(est.value);
  est.params = {{"n", static_cast<double>(n_max)},
                {"s", s},
                {"alphabet_size", static_cast<double>(B.size())},
                {"tau_min", t.tau_min_value},
                {"threads", static_cast<double>(std::max(1, opts.threads))}};
  return est;
}

inline PressureEstimate pressure_spectral(const PotentialSpec& pot, double s,
                                          const Alphabet& B,
                                          const SpectralOptions& opts =
                                              SpectralOptions{}) {
  const SpectralResult r = transfer_spectral_radius(pot, s, B, opts);
  PressureEstimate est;
  est.method = r.used_pl_fallback ? "spectral-pl" : "spectral";
  est.value = r.log_lambda;
  est.residual = r.residual;
  est.converged = r.converged;
  est.params = {{"K", static_cast<double>(opts.collocation_points)},
                {"s", s},
                {"alphabet_size", static_cast<double>(B.size())},
                {"iterations", static_cast<double>(r.iterations)}};
  return est;
}

}  // namespace cfdim
