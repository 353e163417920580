#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cfdim/bigmath.hpp"
#include "cfdim/continued_fraction.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/potential.hpp"
#include "cfdim/word.hpp"

namespace cfdim {

// ---------------------------------------------------------------------------
// Schedule: the level bookkeeping of the nested construction. Arrays are
// indexed by level j = 0..J with the j = 0 slots holding the seed values
// (t[0] = t0, n[0] = t0 + 2); m[0] and l[0] are unused.
// ---------------------------------------------------------------------------
struct Schedule {
  int r = 1;
  int t0 = 1;
  int J = 1;
  int M = 1;
  std::vector<long long> t, m, l, n;

  long long final_depth() const { return n.back() + (r - 1); }
};

inline Schedule build_schedule(int r, int t0, const std::vector<long long>& m_seq,
                               int J, int M) {
  if (r < 1) throw Error("build_schedule: r must be >= 1");
  if (t0 < 0) throw Error("build_schedule: t0 must be >= 0");
  if (J < 1) throw Error("build_schedule: J must be >= 1");
  if (M < 1) throw Error("build_schedule: M must be >= 1");
  if (static_cast<int>(m_seq.size()) < J) {
    throw Error("build_schedule: m sequence shorter than J");
  }
  Schedule sch;
  sch.r = r;
  sch.t0 = t0;
  sch.J = J;
  sch.M = M;
  sch.t.assign(J + 1, 0);
  sch.m.assign(J + 1, 0);
  sch.l.assign(J + 1, 0);
  sch.n.assign(J + 1, 0);
  sch.t[0] = t0;
  sch.n[0] = t0 + 2;
  for (int j = 1; j <= J; ++j) {
    sch.t[j] = t0 + j;
    sch.m[j] = m_seq[j - 1];
    if (sch.m[j] < 1) throw Error("build_schedule: m_j must be >= 1");
    if (j > 1 && sch.m[j] <= sch.m[j - 1]) {
      throw Error("build_schedule: m sequence must be strictly increasing");
    }
    sch.l[j] = sch.t[j] + sch.m[j];
    sch.n[j] = sch.n[j - 1] + (r - 1) + sch.t[j] + sch.m[j] + 1;
  }
  return sch;
}

// ---------------------------------------------------------------------------
// GammaLadder: the r - 1 window bases with log gamma_i = g_r(s)(1-s)^i/s^{i+1}
// plus the final base e/(gamma_0...gamma_{r-2}). The bases live in [1, e] and
// are nonincreasing in i (the defining exponents form a geometric sequence
// with ratio (1-s)/s < 1 on the valid s-range). Their logs telescope:
// (1-s) * sum(log gamma_i) - s = -g_r(s).
// ---------------------------------------------------------------------------
struct GammaLadder {
  int r = 1;
  double s = 0.0;
  std::vector<double> log_gamma;  // size r - 1 (empty when r = 1)
  double log_final = 1.0;         // log(e / prod(gamma_i))

  // Base used by the first window and by the level normalization; the
  // degenerate r = 1 ladder replaces gamma_0 by e.
  double gamma0_log() const { return log_gamma.empty() ? 1.0 : log_gamma.front(); }
};

inline GammaLadder gamma_ladder(int r, double s) {
  if (r < 1) throw Error("gamma_ladder: r must be >= 1");
  if (!(s > 0.5) || !(s < 1.0)) {
    throw Error("gamma_ladder: s must lie in (1/2, 1)");
  }
  GammaLadder lad;
  lad.r = r;
  lad.s = s;
  const double g = growth_exponent(r, s);
  const double ratio = (1.0 - s) / s;
  double term = g / s;  // log gamma_0
  double sum = 0.0;
  for (int i = 0; i + 1 < r; ++i) {
    lad.log_gamma.push_back(term);
    sum += term;
    term *= ratio;
  }
  lad.log_final = 1.0 - sum;
  return lad;
}

// ---------------------------------------------------------------------------
// Point generation.
// ---------------------------------------------------------------------------
struct WindowRecord {
  long long position = 0;  // 1-based index of the digit in the word
  double exponent = 0.0;   // log of the real window's lower edge
  BigInt first, last;      // the integer window [first, last]
  BigInt digit;            // the digit drawn
  bool widened = false;    // true when the real window held no integer
};

struct LevelRecord {
  int j = 0;
  Word block;              // copied prefix + free digits (length l_j)
  double anchor = 0.0;     // z_j, the rational anchor of the block
  double tau_value = 0.0;  // tau(z_j)
  double birkhoff = 0.0;   // S_{l_j} h(z_j)
  double exponent = 0.0;   // E_j = tau(z_j) * S_{l_j} h(z_j)
  std::vector<WindowRecord> windows;  // r entries
};

struct GeneratedPoint {
  Word word;
  BigRat value;  // anchor of the deepest constructed cylinder
  std::uint64_t seed = 0;
  int widened_windows = 0;
  std::vector<LevelRecord> levels;
};

namespace detail {

// Uniform draw from [0, count): rejection sampling over the bit-width.
inline BigInt uniform_big(Rng& rng, const BigInt& count) {
  if (count <= 0) throw Error("uniform_big: empty range");
  if (count == 1) return BigInt(0);
  static const BigInt kSmall((std::numeric_limits<std::uint64_t>::max)());
  if (count <= kSmall) {
    const std::uint64_t n = static_cast<std::uint64_t>(count);
    return BigInt(rng.uniform(0, n - 1));
  }
  const unsigned bits = boost::multiprecision::msb(count) + 1;
  for (;;) {
    BigInt x = 0;
    for (unsigned got = 0; got < bits; got += 64) {
      x <<= 64;
      x |= BigInt(rng.next_u64());
    }
    const unsigned extra = (64 - bits % 64) % 64;
    x >>= extra;
    if (x < count) return x;
  }
}

struct IntWindow {
  BigInt first, last;  // inclusive
  bool widened = false;
};

// Integers inside the real window [e^L, 2 e^L), staying strictly above the
// lower edge. Large windows get a 1e-8 relative safety bump on both edges:
// doubles cannot hold e^L exactly, and the bump only narrows the window, so
// the lower-bound products the membership checks rely on keep a margin.
inline IntWindow integer_window(double L) {
  if (!std::isfinite(L)) throw Error("integer_window: non-finite exponent");
  IntWindow w;
  if (L < 30.0) {
    const double x = std::exp(L);
    w.first = BigInt(std::floor(x)) + 1;
    w.last = BigInt(std::ceil(2.0 * x)) - 1;
  } else {
    const double kBump = 1e-8;
    w.first = floor_exp(L + kBump) + 1;
    w.last = floor_exp(L + std::numbers::ln2 - kBump);
  }
  if (w.last < w.first) {
    w.last = w.first;  // widen to the ceiling integer
    w.widened = true;
  }
  return w;
}

// Deterministic seed word for the outermost cylinder: the expansion of the
// grid argmin of tau (all-ones for constant tau), padded with ones. The grid
// point is expanded as the exact rational i/(grid-1), so the seed digits do
// not depend on binary rounding of the grid coordinate.
inline Word level_zero_word(const PotentialSpec& pot, long long length,
                            int grid = 10001) {
  Word w;
  if (!pot.tau.is_const()) {
    int best_i = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      const double x = static_cast<double>(i) / (grid - 1);
      const double v = pot.tau.eval(x);
      if (v < best) {
        best = v;
        best_i = i;
      }
    }
    w = expand(BigRat(BigInt(best_i), BigInt(grid - 1)));
    if (static_cast<long long>(w.size()) > length) w.resize(length);
  }
  while (static_cast<long long>(w.size()) < length) w.emplace_back(1);
  return w;
}

inline double block_exponent(const PotentialSpec& pot, const Word& block,
                             double* anchor_out = nullptr,
                             double* tau_out = nullptr,
                             double* birkhoff_out = nullptr) {
  const Convergents cv = convergents(block);
  const double anchor = to_double(BigRat(cv.pn(), cv.qn()));
  const double tau_value = pot.tau.eval(anchor);
  const double birkhoff = ergodic_sum(pot.h, block);
  if (anchor_out) *anchor_out = anchor;
  if (tau_out) *tau_out = tau_value;
  if (birkhoff_out) *birkhoff_out = birkhoff;
  return tau_value * birkhoff;
}

}  // namespace detail

inline GeneratedPoint generate_point(const Schedule& sch, const GammaLadder& lad,
                                     const PotentialSpec& pot,
                                     std::uint64_t seed) {
  if (lad.r != sch.r) throw Error("generate_point: ladder order differs from schedule order");
  GeneratedPoint out;
  out.seed = seed;
  Rng rng(seed);
  const int r = sch.r;
  Word w = detail::level_zero_word(pot, sch.n[0] + (r - 1));

  for (int j = 1; j <= sch.J; ++j) {
    LevelRecord lev;
    lev.j = j;
    Word block(w.begin(), w.begin() + sch.t[j]);  // copied prefix
    for (long long i = 0; i < sch.m[j]; ++i) {
      block.emplace_back(rng.uniform(1, static_cast<std::uint64_t>(sch.M)));
    }
    w.insert(w.end(), block.begin(), block.end());
    lev.exponent = detail::block_exponent(pot, block, &lev.anchor,
                                          &lev.tau_value, &lev.birkhoff);
    lev.block = std::move(block);

    for (int i = 0; i < r; ++i) {
      const double base_log =
          (i + 1 < r) ? lad.log_gamma[i] : lad.log_final;
      const double L = lev.exponent * base_log;
      detail::IntWindow iw = detail::integer_window(L);
      BigInt digit =
          iw.first + detail::uniform_big(rng, iw.last - iw.first + 1);
      if (iw.widened) ++out.widened_windows;
      w.push_back(digit);
      lev.windows.push_back({static_cast<long long>(w.size()), L, iw.first,
                             iw.last, std::move(digit), iw.widened});
    }
    out.levels.push_back(std::move(lev));
  }

  const Convergents cv = convergents(w);
  out.value = BigRat(cv.pn(), cv.qn());
  out.word = std::move(w);
  return out;
}

// ---------------------------------------------------------------------------
// Membership: digits n+1..n+r must multiply to at least e^{tau(z) S_n h(z)},
// with both factors evaluated at the rational anchor of the length-n prefix.
// ---------------------------------------------------------------------------
inline bool membership_check(const Word& w, const PotentialSpec& pot,
                             std::size_t n, int r) {
  if (r < 1) throw Error("membership_check: r must be >= 1");
  if (n < 1) throw Error("membership_check: index must be >= 1");
  if (w.size() < n + static_cast<std::size_t>(r)) {
    throw Error("membership_check: word too short");
  }
  const Word prefix(w.begin(), w.begin() + n);
  const double threshold = detail::block_exponent(pot, prefix);
  BigInt product(1);
  for (std::size_t i = n; i < n + static_cast<std::size_t>(r); ++i) {
    product *= w[i];
  }
  const double tol = 1e-12 * std::max(1.0, std::abs(threshold));
  return log_big(product) >= threshold - tol;
}

// Block-local membership at construction level j: the level's window digits
// are checked against the same anchor and Birkhoff sum the windows were built
// from (the block of length l_j).
inline bool membership_at_level(const GeneratedPoint& pt, const Schedule& sch,
                                const PotentialSpec& pot, int j) {
  if (j < 1 || j > static_cast<int>(pt.levels.size())) {
    throw Error("membership_at_level: level out of range");
  }
  const LevelRecord& lev = pt.levels[j - 1];
  Word suffix = lev.block;
  for (const WindowRecord& wr : lev.windows) suffix.push_back(wr.digit);
  return membership_check(suffix, pot, lev.block.size(), sch.r);
}

// ---------------------------------------------------------------------------
// Measure weights along a generated path. Each level normalizes
// sum_k (gamma_0^{E_k} q_k^2)^{-s_j} = 1 over the level's free blocks, then
// splits every window fan uniformly over its realized integer count, so
// children sum to their parent exactly.
// ---------------------------------------------------------------------------
struct MeasureLevel {
  int j = 0;
  double s_j = 0.0;                 // level normalization exponent
  std::size_t family_size = 0;      // number of sibling free blocks (M^{m_j})
  double block_weight_log = 0.0;    // log weight after the block split
  double consistency_error = 0.0;   // |sum(sibling shares) - 1|
  std::vector<BigInt> window_counts;
  std::vector<double> window_weight_logs;
};

struct MeasureTree {
  double root_weight_log = 0.0;
  std::vector<MeasureLevel> levels;
  double leaf_weight_log = 0.0;
  double max_consistency_error = 0.0;
};

namespace detail {

struct LevelNorm {
  double s_j = 0.0;
  double log_z = 0.0;  // log normalization at s_j (near zero)
  double consistency_error = 0.0;
  std::size_t family_size = 0;
};

// Enumerate the M^m sibling blocks sharing `copied` and solve the level
// normalization for s in (0, 1].
inline LevelNorm level_normalization(const PotentialSpec& pot,
                                     const GammaLadder& lad, const Word& copied,
                                     long long m, int M) {
  double family = 1.0;
  for (long long i = 0; i < m; ++i) {
    family *= M;
    if (family > 8e6) {
      throw BudgetError("assign_measure: level family too large to normalize");
    }
  }
  const double g0 = lad.gamma0_log();
  std::vector<double> coeff;
  coeff.reserve(static_cast<std::size_t>(family));
  Word block = copied;
  block.resize(copied.size() + m, BigInt(1));
  // Odometer over the free digits.
  for (;;) {
    coeff.push_back(block_exponent(pot, block) * g0 +
                    2.0 * log_big(convergents(block).qn()));
    long long pos = m - 1;
    while (pos >= 0 && block[copied.size() + pos] == M) {
      block[copied.size() + pos] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++block[copied.size() + pos];
  }

  auto log_sum = [&](double s) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double c : coeff) hi = std::max(hi, -s * c);
    double acc = 0.0;
    for (double c : coeff) acc += std::exp(-s * c - hi);
    return hi + std::log(acc);
  };

  LevelNorm norm;
  norm.family_size = coeff.size();
  double lo = 0.0, hi = 1.0;
  if (!(log_sum(1.0) <= 0.0)) {
    throw Error("assign_measure: normalization root not bracketed in (0, 1]");
  }
  for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (log_sum(mid) > 0.0 ? lo : hi) = mid;
  }
  norm.s_j = 0.5 * (lo + hi);
  norm.log_z = log_sum(norm.s_j);
  // Realized consistency once shares are divided by Z.
  double sum_shares = 0.0;
  for (double c : coeff) sum_shares += std::exp(-norm.s_j * c - norm.log_z);
  norm.consistency_error = std::abs(sum_shares - 1.0);
  return norm;
}

}  // namespace detail

// Optional cache: the normalization depends only on (level, copied prefix),
// which repeated sampling runs share.
struct MeasureCache {
  std::map<std::string, detail::LevelNorm> norms;
};

inline MeasureTree assign_measure(const Schedule& sch, const GammaLadder& lad,
                                  const PotentialSpec& pot,
                                  const GeneratedPoint& pt,
                                  MeasureCache* cache = nullptr) {
  if (static_cast<int>(pt.levels.size()) != sch.J) {
    throw Error("assign_measure: point does not match the schedule depth");
  }
  MeasureTree tree;
  double cur = 0.0;
  for (int j = 1; j <= sch.J; ++j) {
    const LevelRecord& lev = pt.levels[j - 1];
    const Word copied(pt.word.begin(), pt.word.begin() + sch.t[j]);

    detail::LevelNorm norm;
    if (cache) {
      const std::string key = std::to_string(j) + "|" + to_string(copied);
      auto it = cache->norms.find(key);
      if (it == cache->norms.end()) {
        it = cache->norms
                 .emplace(key, detail::level_normalization(pot, lad, copied,
                                                           sch.m[j], sch.M))
                 .first;
      }
      norm = it->second;
    } else {
      norm = detail::level_normalization(pot, lad, copied, sch.m[j], sch.M);
    }

    const double c_self =
        lev.exponent * lad.gamma0_log() +
        2.0 * log_big(convergents(lev.block).qn());

    MeasureLevel ml;
    ml.j = j;
    ml.s_j = norm.s_j;
    ml.family_size = norm.family_size;
    ml.consistency_error = norm.consistency_error;
    cur += -norm.s_j * c_self - norm.log_z;
    ml.block_weight_log = cur;
    for (const WindowRecord& wr : lev.windows) {
      const BigInt count = wr.last - wr.first + 1;
      cur -= log_big(count);
      ml.window_counts.push_back(count);
      ml.window_weight_logs.push_back(cur);
    }
    tree.max_consistency_error =
        std::max(tree.max_consistency_error, ml.consistency_error);
    tree.levels.push_back(std::move(ml));
  }
  tree.leaf_weight_log = cur;
  return tree;
}

// ---------------------------------------------------------------------------
// Gap estimates, exact in rational arithmetic.
// ---------------------------------------------------------------------------
struct GapCheck {
  BigRat gap;
  BigRat bound;
  bool holds = false;
};

// Gap between the admissible cores of sibling cylinders with digits b and
// b + 1 under prefix `w` when the next digit is capped by M: the sliver the
// digits above M occupy at the (b+1)-sibling's anchor. Compared against
// |I(w.b)| / (3M).
inline GapCheck gap_free_adjacent(const Word& w, std::uint32_t b,
                                  std::uint32_t M) {
  if (M < 3) throw Error("gap_free_adjacent: needs M >= 3");
  if (b < 1 || b >= M) throw Error("gap_free_adjacent: needs 1 <= b < M");
  const Convergents cv = convergents(w);
  const BigInt& q1 = cv.qn();
  const BigInt& q0 = cv.qn_prev();
  const BigInt qb = b * q1 + q0;
  const BigInt qb1 = (b + 1) * q1 + q0;
  GapCheck res;
  res.gap = BigRat(BigInt(1), qb1 * ((BigInt(M) + 1) * qb1 + q1));
  res.bound = BigRat(BigInt(1), BigInt(3) * M * qb * (qb + q1));
  res.holds = res.gap >= res.bound;
  return res;
}

// Gap between a window family starting at digit `first` and the low-digit
// edge of its parent cylinder, compared against |I(parent)| / 8.
inline GapCheck gap_window_low(const Word& w, const BigInt& first) {
  if (first < 2) throw Error("gap_window_low: window must start at 2 or above");
  const Convergents cv = convergents(w);
  const BigInt& q = cv.qn();
  const BigInt& qp = cv.qn_prev();
  GapCheck res;
  res.gap = BigRat(first - 1, (q + qp) * (first * q + qp));
  res.bound = BigRat(BigInt(1), BigInt(8) * q * (q + qp));
  res.holds = res.gap >= res.bound;
  return res;
}

// ---------------------------------------------------------------------------
// Fundamental cylinders: the digit constraint active at order n + 1.
// ---------------------------------------------------------------------------
enum class CaseTag { k3a, k3b, k3c, k3d, k3e };

inline const char* to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::k3a: return "3a";
    case CaseTag::k3b: return "3b";
    case CaseTag::k3c: return "3c";
    case CaseTag::k3d: return "3d";
    case CaseTag::k3e: return "3e";
  }
  return "?";
}

struct FundamentalCylinder {
  Word prefix;
  int level = 0;
  CaseTag tag = CaseTag::k3e;
  BigInt digit_lo, digit_hi;  // inclusive admissible range at the next position
};

inline FundamentalCylinder fundamental_cylinder(const Schedule& sch,
                                                const GeneratedPoint& pt,
                                                long long order) {
  if (order < 0 || order + 1 > static_cast<long long>(pt.word.size())) {
    throw Error("fundamental_cylinder: order out of range");
  }
  FundamentalCylinder fc;
  fc.prefix.assign(pt.word.begin(), pt.word.begin() + order);
  const long long pos = order + 1;
  const int r = sch.r;

  if (pos <= sch.n[0] + (r - 1)) {  // inside the level-0 seed block
    fc.level = 0;
    fc.tag = CaseTag::k3e;
    fc.digit_lo = fc.digit_hi = pt.word[pos - 1];
    return fc;
  }
  for (int j = 1; j <= sch.J; ++j) {
    const long long base = sch.n[j - 1] + (r - 1);
    fc.level = j;
    if (pos <= base + sch.t[j]) {  // copied prefix: forced digit
      fc.tag = CaseTag::k3e;
      fc.digit_lo = fc.digit_hi = pt.word[pos - 1];
      return fc;
    }
    if (pos <= sch.n[j] - 1) {  // free digit
      fc.tag = CaseTag::k3a;
      fc.digit_lo = 1;
      fc.digit_hi = sch.M;
      return fc;
    }
    if (pos <= sch.n[j] + (r - 1)) {  // window digit
      const int i = static_cast<int>(pos - sch.n[j]);
      const WindowRecord& wr = pt.levels[j - 1].windows[i];
      fc.tag = (i == 0) ? CaseTag::k3b
                        : (i == r - 1 ? CaseTag::k3d : CaseTag::k3c);
      fc.digit_lo = wr.first;
      fc.digit_hi = wr.last;
      return fc;
    }
  }
  throw Error("fundamental_cylinder: order beyond the constructed depth");
}

}  // namespace cfdim
