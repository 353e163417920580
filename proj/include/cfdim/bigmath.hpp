#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cfdim/errors.hpp"

namespace cfdim {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Natural log of a positive big integer, accurate to ~1 ulp of double.
// Uses the top 64 bits plus an exact power-of-two offset, so it works for
// integers far beyond double range.
inline double log_big(const BigInt& v) {
  if (v <= 0) throw Error("log_big: argument must be positive");
  const unsigned bits = boost::multiprecision::msb(v) + 1;
  if (bits <= 63) return std::log(v.convert_to<double>());
  const unsigned shift = bits - 63;
  const std::uint64_t top = BigInt(v >> shift).convert_to<std::uint64_t>();
  return std::log(static_cast<double>(top)) +
         static_cast<double>(shift) * std::numbers::ln2_v<double>;
}

// Natural log of a positive big rational.
inline double log_rat(const BigRat& v) {
  if (v <= 0) throw Error("log_rat: argument must be positive");
  return log_big(boost::multiprecision::numerator(v)) -
         log_big(boost::multiprecision::denominator(v));
}

// Round a big rational to the nearest double, robust against overflow of the
// numerator or denominator individually.
inline double to_double(const BigRat& v) {
  if (v == 0) return 0.0;
  if (v < 0) return -to_double(BigRat(-v));
  const BigInt num = boost::multiprecision::numerator(v);
  const BigInt den = boost::multiprecision::denominator(v);
  const unsigned bn = boost::multiprecision::msb(num) + 1;
  const unsigned bd = boost::multiprecision::msb(den) + 1;
  if (bn <= 900 && bd <= 900) {
    return num.convert_to<double>() / den.convert_to<double>();
  }
  // Reduce both to <= 64 significant bits and track the exact binary shift.
  const int sn = bn > 64 ? static_cast<int>(bn - 64) : 0;
  const int sd = bd > 64 ? static_cast<int>(bd - 64) : 0;
  const double dn = BigInt(num >> sn).convert_to<double>();
  const double dd = BigInt(den >> sd).convert_to<double>();
  return std::ldexp(dn / dd, sn - sd);
}

// floor(e^x) as a big integer, valid for x far beyond double overflow.
// Relative accuracy ~1e-15 (the 2^frac mantissa is a double); callers that
// need guaranteed one-sided bounds must add their own margin.
inline BigInt floor_exp(double x) {
  if (!std::isfinite(x)) throw Error("floor_exp: non-finite exponent");
  if (x < 0) return BigInt(0);
  if (x < 500.0) {
    return BigInt(std::floor(std::exp(x)));
  }
  const double y = x / std::numbers::ln2_v<double>;
  const double yi = std::floor(y);
  const double yf = y - yi;  // in [0,1)
  // mantissa = 2^yf in [1,2); take 62 bits of it.
  const double mant = std::exp2(yf);
  const auto mant62 =
      static_cast<std::uint64_t>(std::floor(std::ldexp(mant, 61)));
  const long long shift = static_cast<long long>(yi) - 61;
  BigInt m(mant62);
  if (shift >= 0) return m << shift;
  return m >> (-shift);
}

// Deterministic, implementation-independent RNG (splitmix64 core). Used
// instead of <random> distributions so that seeded outputs are reproducible
// byte-for-byte on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [lo, hi], crafted with rejection sampling (unbiased).
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw Error("Rng::uniform: empty range");
    const std::uint64_t span = hi - lo + 1;  // 0 means full 2^64 range
    if (span == 0) return next_u64();
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + v % span;
  }

  // Uniform double in [0,1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace cfdim
