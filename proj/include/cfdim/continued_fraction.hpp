#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cfdim/bigmath.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/word.hpp"

namespace cfdim {

// Convergent tables for a word (a_1, ..., a_n):
//   p[0] = 0, q[0] = 1   (and implicitly p_{-1} = 1, q_{-1} = 0),
//   p[k+1] = a_{k+1} p[k] + p[k-1],  q[k+1] = a_{k+1} q[k] + q[k-1].
// p[k]/q[k] is the value of the truncated word (a_1, ..., a_k).
struct Convergents {
  std::vector<BigInt> p, q;

  std::size_t order() const { return q.empty() ? 0 : q.size() - 1; }

  const BigInt& pn() const { return p.back(); }
  const BigInt& qn() const { return q.back(); }
  // One-before-last values (p_{n-1}, q_{n-1}); for order 0 these are the
  // implicit p_{-1} = 1, q_{-1} = 0.
  BigInt pn_prev() const { return p.size() >= 2 ? p[p.size() - 2] : BigInt(1); }
  BigInt qn_prev() const { return q.size() >= 2 ? q[q.size() - 2] : BigInt(0); }
};

inline Convergents convergents(const Word& w) {
  validate_word(w);
  Convergents c;
  c.p.reserve(w.size() + 1);
  c.q.reserve(w.size() + 1);
  c.p.emplace_back(0);
  c.q.emplace_back(1);
  BigInt pm1(1), qm1(0);  // p_{-1}, q_{-1}
  for (const BigInt& a : w) {
    BigInt pk = a * c.p.back() + pm1;
    BigInt qk = a * c.q.back() + qm1;
    pm1 = c.p.back();
    qm1 = c.q.back();
    c.p.push_back(std::move(pk));
    c.q.push_back(std::move(qk));
  }
  return c;
}

// Exact value [0; a_1, ..., a_n] = p_n / q_n. The empty word has value 0.
inline BigRat value(const Word& w) {
  const Convergents c = convergents(w);
  return BigRat(c.pn(), c.qn());
}

// The fundamental cylinder of a word: all points of [0,1) whose expansion
// starts with the word. Order-n cylinders are half-open intervals with
// endpoints p_n/q_n and (p_n + p_{n-1})/(q_n + q_{n-1}); the closed side is
// at p_n/q_n, which is the left end for even n and the right end for odd n.
struct Cylinder {
  BigRat lo, hi;
  bool closed_left = true;  // closed at lo (even order) or at hi (odd order)
  std::size_t order = 0;

  BigRat length() const { return hi - lo; }

  bool contains(const BigRat& x) const {
    if (x < lo || x > hi) return false;
    if (x == lo) return closed_left;
    if (x == hi) return !closed_left;
    return true;
  }
};

inline Cylinder cylinder(const Word& w) {
  const Convergents c = convergents(w);
  Cylinder cyl;
  cyl.order = w.size();
  if (w.empty()) {
    cyl.lo = 0;
    cyl.hi = 1;
    cyl.closed_left = true;
    return cyl;
  }
  BigRat at_anchor(c.pn(), c.qn());
  BigRat at_far(c.pn() + c.pn_prev(), c.qn() + c.qn_prev());
  if (w.size() % 2 == 0) {
    cyl.lo = std::move(at_anchor);
    cyl.hi = std::move(at_far);
    cyl.closed_left = true;
  } else {
    cyl.lo = std::move(at_far);
    cyl.hi = std::move(at_anchor);
    cyl.closed_left = false;
  }
  return cyl;
}

// Exact cylinder length 1 / (q_n (q_n + q_{n-1})).
inline BigRat cylinder_length(const Convergents& c) {
  return BigRat(BigInt(1), c.qn() * (c.qn() + c.qn_prev()));
}

// Canonical expansion of an exact rational in [0,1]. Terminates, never ends
// in a 1 except for the word [1] (the expansion of the point 1).
inline Word expand(const BigRat& x) {
  if (x < 0 || x > 1) throw Error("expand: argument must lie in [0,1]");
  Word w;
  BigInt num = boost::multiprecision::numerator(x);
  BigInt den = boost::multiprecision::denominator(x);
  while (num != 0) {
    BigInt a = den / num;  // floor(1/x), exact since 0 < num <= den
    BigInt rem = den - a * num;
    w.push_back(std::move(a));
    den = std::move(num);
    num = std::move(rem);
  }
  return w;
}

// Gauss map T(x) = 1/x - floor(1/x) on (0,1), exact on rationals.
inline BigRat gauss_apply(const BigRat& x) {
  if (x <= 0 || x >= 1) throw Error("gauss_apply: argument must lie in (0,1)");
  BigInt num = boost::multiprecision::numerator(x);
  BigInt den = boost::multiprecision::denominator(x);
  BigInt a = den / num;
  return BigRat(den - a * num, num);
}

// Birkhoff sum of log|T'| over the first n iterates, evaluated at the
// cylinder's anchor point p_n/q_n: the product of derivatives telescopes
// exactly, and this returns its logarithm 2*log(q_n).
inline double derivative_product(const Word& w) {
  if (w.empty()) return 0.0;
  return 2.0 * log_big(convergents(w).qn());
}

// Legendre predicate: |x - p/q| < 1/(2 q^2). When it holds (and p/q is in
// lowest terms), p/q is a convergent of x.
inline bool legendre_check(const BigRat& x, const BigInt& p, const BigInt& q) {
  if (q < 1) throw Error("legendre_check: q must be positive");
  BigRat diff = x - BigRat(p, q);
  if (diff < 0) diff = -diff;
  return diff < BigRat(BigInt(1), 2 * q * q);
}

inline bool legendre_check(double x, const BigInt& p, const BigInt& q) {
  return legendre_check(BigRat(x), p, q);
}

// Floating-point expansion with an explicit trust count: digit k is trusted
// while q_k stays below 2^20. Rounding error in the Gauss iteration grows
// like q_k^2 * eps, so this keeps the accumulated error in the iterate below
// ~2.5e-4 — far from flipping a digit except on razor-thin boundaries.
struct RealExpansion {
  Word word;
  std::size_t trusted = 0;
};

inline RealExpansion expand_real(double x, std::size_t max_digits = 64) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error("expand_real: argument must lie in [0,1]");
  }
  RealExpansion out;
  const double q_trust_cap = 1048576.0;  // 2^20
  double qk = 1.0, qk_prev = 0.0;
  bool trusted_region = true;
  for (std::size_t k = 0; k < max_digits && x > 0.0; ++k) {
    const double inv = 1.0 / x;
    double a = std::floor(inv);
    if (a < 1.0) a = 1.0;
    if (!std::isfinite(a) || a >= 9.007199254740992e15) {
      break;  // the remainder is numerically zero
    }
    out.word.emplace_back(static_cast<long long>(a));
    x = inv - a;
    if (x < 0.0) x = 0.0;
    const double qn = a * qk + qk_prev;
    qk_prev = qk;
    qk = qn;
    if (trusted_region && qk <= q_trust_cap) {
      out.trusted = out.word.size();
    } else {
      trusted_region = false;
    }
  }
  return out;
}

// Estimated irrationality exponent from a finite expansion:
//   2 + max_n log(a_{n+1}) / log(q_n)
// over indices with q_n >= 2. Requires at least three digits.
inline double irrationality_exponent_estimate(const Word& w) {
  if (w.size() < 3) {
    throw Error("irrationality_exponent_estimate: need at least 3 digits");
  }
  const Convergents c = convergents(w);
  double best = 0.0;
  for (std::size_t n = 1; n + 1 <= w.size(); ++n) {
    if (c.q[n] < 2) continue;
    const double r = log_big(w[n]) / log_big(c.q[n]);
    best = std::max(best, r);
  }
  return 2.0 + best;
}

}  // namespace cfdim
