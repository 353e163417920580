#pragma once

#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "cfdim/bigmath.hpp"
#include "cfdim/errors.hpp"

namespace cfdim {

// A finite word of partial quotients (digits), each a positive integer.
// Digits can be arbitrarily large, so they are stored exactly.
using Word = std::vector<BigInt>;

inline Word word_of(std::initializer_list<long long> digits) {
  Word w;
  w.reserve(digits.size());
  for (long long d : digits) w.emplace_back(d);
  return w;
}

inline Word all_ones(std::size_t n) { return Word(n, BigInt(1)); }

inline void validate_word(const Word& w) {
  for (const BigInt& d : w) {
    if (d < 1) throw Error("word digits must be positive integers");
  }
}

// Canonical finite expansions never end in a 1, except for the single-digit
// word [1] itself (which represents the point 1).
inline bool is_canonical(const Word& w) {
  for (const BigInt& d : w) {
    if (d < 1) return false;
  }
  if (w.size() >= 2 && w.back() == 1) return false;
  return true;
}

inline std::string to_string(const Word& w) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << ',';
    os << w[i];
  }
  os << ']';
  return os.str();
}

inline Word concat(const Word& a, const Word& b) {
  Word r = a;
  r.insert(r.end(), b.begin(), b.end());
  return r;
}

}  // namespace cfdim
