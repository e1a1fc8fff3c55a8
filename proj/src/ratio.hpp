#pragma once

// tanh(x)/x and atanh(x)/x with series expansions near zero.

#include <algorithm>
#include <cmath>

namespace mhcl::ad::detail {

inline constexpr double kSeries = 1e-3;

inline double tanh_ratio_value(double x) {
  if (std::abs(x) < kSeries) {
    const double x2 = x * x;
    return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0 - 17.0 * x2 * x2 * x2 / 315.0;
  }
  return std::tanh(x) / x;
}

inline double tanh_ratio_slope(double x) {
  if (std::abs(x) < kSeries) {
    const double x2 = x * x;
    return -2.0 * x / 3.0 + 8.0 * x * x2 / 15.0 - 102.0 * x * x2 * x2 / 315.0;
  }
  const double th = std::tanh(x);
  return ((1.0 - th * th) * x - th) / (x * x);
}

inline constexpr double kAtanhLimit = 1.0 - 1e-12;

inline double atanh_ratio_value(double x) {
  x = std::clamp(x, -kAtanhLimit, kAtanhLimit);
  if (std::abs(x) < kSeries) {
    const double x2 = x * x;
    return 1.0 + x2 / 3.0 + x2 * x2 / 5.0 + x2 * x2 * x2 / 7.0;
  }
  return std::atanh(x) / x;
}

inline double atanh_ratio_slope(double x) {
  if (std::abs(x) >= kAtanhLimit) return 0.0;
  if (std::abs(x) < kSeries) {
    const double x2 = x * x;
    return 2.0 * x / 3.0 + 4.0 * x * x2 / 5.0 + 6.0 * x * x2 * x2 / 7.0;
  }
  return (x / (1.0 - x * x) - std::atanh(x)) / (x * x);
}

// Slopes divided by x, finite at zero.
inline double tanh_ratio_slope_over_x(double x) {
  if (std::abs(x) < kSeries) {
    const double x2 = x * x;
    return -2.0 / 3.0 + 8.0 * x2 / 15.0 - 34.0 * x2 * x2 / 105.0;
  }
  return tanh_ratio_slope(x) / x;
}

inline double atanh_ratio_slope_over_x(double x) {
  if (std::abs(x) >= kAtanhLimit) return 0.0;
  if (std::abs(x) < kSeries) {
    const double x2 = x * x;
    return 2.0 / 3.0 + 4.0 * x2 / 5.0 + 6.0 * x2 * x2 / 7.0;
  }
  return atanh_ratio_slope(x) / x;
}

}  // namespace mhcl::ad::detail
