#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cfdim/errors.hpp"

namespace cfdim {

// A finite digit alphabet: strictly increasing positive integers.
using Alphabet = std::vector<std::uint32_t>;

inline void validate_alphabet(const Alphabet& a) {
  if (a.empty()) throw Error("alphabet must be non-empty");
  std::uint32_t prev = 0;
  for (std::uint32_t d : a) {
    if (d < 1) throw Error("alphabet digits must be positive");
    if (d <= prev) throw Error("alphabet digits must be strictly increasing");
    prev = d;
  }
}

inline Alphabet alphabet_range(std::uint32_t lo, std::uint32_t hi) {
  if (lo < 1 || hi < lo) throw Error("bad alphabet range");
  Alphabet a;
  a.reserve(hi - lo + 1);
  for (std::uint32_t d = lo; d <= hi; ++d) a.push_back(d);
  return a;
}

// Parse "lo..hi" or a comma-separated digit list (a single digit included).
inline Alphabet parse_alphabet(std::string_view text) {
  auto parse_u32 = [&](std::string_view t, std::size_t off) -> std::uint32_t {
    if (t.empty()) throw ParseError("expected a digit value", off);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const char c = t[i];
      if (c < '0' || c > '9') {
        throw ParseError("malformed digit value", off + i);
      }
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
      if (v > 1000000000ULL) throw ParseError("digit value too large", off);
    }
    return static_cast<std::uint32_t>(v);
  };

  const std::size_t dots = text.find("..");
  Alphabet a;
  if (dots != std::string_view::npos) {
    const std::uint32_t lo = parse_u32(text.substr(0, dots), 0);
    const std::uint32_t hi = parse_u32(text.substr(dots + 2), dots + 2);
    if (lo < 1 || hi < lo) {
      throw ParseError("empty or invalid alphabet range", 0);
    }
    return alphabet_range(lo, hi);
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    a.push_back(parse_u32(text.substr(start, comma - start), start));
    start = comma + 1;
    if (comma == text.size()) break;
  }
  validate_alphabet(a);
  return a;
}

inline std::string describe(const Alphabet& a) {
  // Contiguous ranges print compactly.
  if (a.size() >= 3 && a.back() - a.front() + 1 == a.size()) {
    return std::to_string(a.front()) + ".." + std::to_string(a.back());
  }
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(a[i]);
  }
  return s;
}

}  // namespace cfdim
