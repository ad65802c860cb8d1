#pragma once

#include <cmath>
#include <numbers>

namespace gop {

/// Standard normal density.
inline double norm_pdf(double x) noexcept {
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF. This is the only CDF used in the library (skew-normal
/// densities, Black prices and tests all go through it). erfc keeps full
/// relative accuracy in the lower tail, which 0.5 * (1 + erf) would not.
inline double norm_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x * (0.5 * std::numbers::sqrt2));
}

}  // namespace gop
