#pragma once

// Declare SIMD variants of log/exp (provided by glibc's libmvec) so the
// compiler may vectorize the batched log/exp loops in the enumeration
// kernels. This is the same declaration glibc's own headers attach under
// -ffast-math, but libmvec's routines are accurate to a few ulp and the
// accumulation code does not otherwise rely on any fast-math semantics, so
// we opt in explicitly instead of changing floating-point semantics
// globally. Requires -fno-math-errno to take effect (see the top-level
// build configuration); harmless without it.

#include <cmath>

#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && \
    defined(__linux__) && defined(__GLIBC__) && !defined(CFDIM_NO_SIMD_MATH)
extern "C" {
double log(double) __attribute__((__simd__("notinbranch")));
double exp(double) __attribute__((__simd__("notinbranch")));
}
#define CFDIM_SIMD_MATH 1
#endif
