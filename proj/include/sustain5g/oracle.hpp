#pragma once

// Reference evaluations used to cross-check the double-precision kernels.
// Everything here is computed along an independent path (113-bit __float128
// arithmetic, fixed-length series, optimally truncated expansions) so the
// fast implementations in numerics.hpp are never compared against themselves.

#include <quadmath.h>

#include <cmath>
#include <stdexcept>

namespace sustain5g::oracle {

inline __float128 euler_gamma_q() {
  static const __float128 g = strtoflt128(
      "0.57721566490153286060651209008240243104215933593992", nullptr);
  return g;
}

// 200-term power series in quad precision. Cancellation analysis: partial
// sums grow like e^{|x|}, so with quad epsilon ~1.9e-34 the result keeps
// ~1e-11 relative accuracy at x = -25 and is essentially exact for x > 0
// in this range. Valid for 0 < |x| <= 25.
inline double ei_series_reference(double x) {
  const __float128 xq = x;
  __float128 sum = 0;
  __float128 term = 1;  // x^k / k!
  for (int k = 1; k <= 200; ++k) {
    term *= xq / k;
    sum += term / k;
  }
  const __float128 r = euler_gamma_q() + logq(fabsq(xq)) + sum;
  return static_cast<double>(r);
}

// Asymptotic expansion e^x/x * sum k!/x^k truncated at the smallest term,
// in quad precision. Truncation floor ~sqrt(2*pi*|x|)*e^{-|x|} relative:
// ~1.7e-10 at |x| = 25 and collapsing rapidly beyond. Valid for |x| >= 25.
inline double ei_asymptotic_reference(double x) {
  const __float128 xq = x;
  __float128 sum = 1;
  __float128 term = 1;
  for (int k = 1; k <= 400; ++k) {
    const __float128 next = term * k / xq;
    if (fabsq(next) >= fabsq(term)) break;
    term = next;
    sum += term;
  }
  const __float128 r = expq(xq) / xq * sum;
  return static_cast<double>(r);
}

// Combined reference: worst case ~2e-10 relative at the |x| = 25 seam,
// far better elsewhere. Covers 0 < |x| <= 700.
inline double ei_reference(double x) {
  if (x == 0.0 || std::fabs(x) > 700.0)
    throw std::domain_error("ei_reference: argument out of range");
  if (std::fabs(x) <= 25.0) return ei_series_reference(x);
  return ei_asymptotic_reference(x);
}

}  // namespace sustain5g::oracle
