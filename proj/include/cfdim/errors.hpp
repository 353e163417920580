#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfdim {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text (expressions, descriptors, alphabets). Carries the
// byte offset of the first offending character (or end-of-input).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A function could not be evaluated at a point (log of a non-positive value,
// division by zero, ...). Carries the evaluation point.
class EvalError : public Error {
 public:
  EvalError(const std::string& what, double x)
      : Error(what + " at x=" + std::to_string(x)), x_(x) {}
  double x() const { return x_; }

 private:
  double x_;
};

// An enumeration would exceed its work budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// An iterative scheme failed to converge within its limits.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A quantity that must be monotone was observed to violate monotonicity.
class MonotonicityError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfdim
