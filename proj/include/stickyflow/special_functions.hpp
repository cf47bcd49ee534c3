#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace stickyflow {

namespace detail {

// Laplace continued fraction for erfcx, evaluated by modified Lentz.
// Converges fast for z >= ~4; used above the crossover where exp(z^2)*erfc(z)
// starts losing accuracy and eventually over/underflows.
inline double erfcx_continued_fraction(double z) {
  constexpr double tiny = 1e-300;
  double f = z != 0.0 ? z : tiny;
  double c = f;
  double d = 0.0;
  for (int n = 1; n <= 80; ++n) {
    const double a = 0.5 * static_cast<double>(n);
    d = z + a * d;
    if (d == 0.0) d = tiny;
    c = z + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::numbers::inv_sqrtpi / f;
}

}  // namespace detail

// Scaled complementary error function erfcx(z) = exp(z^2) * erfc(z).
// All semigroup formulas route through this: the closed form
// g_t(x) = theta * exp(2 theta x + 2 theta^2 t) * erfc(x/sqrt(2t) + theta*sqrt(2t))
// overflows when assembled literally, while g_t(x) = theta * erfcx(z) * exp(-x^2/2t)
// with z = x/sqrt(2t) + theta*sqrt(2t) is finite for every admissible input
// (the exponent identity z^2 - x^2/(2t) = 2 theta x + 2 theta^2 t).
inline double erfcx(double z) {
  if (std::isnan(z)) return z;
  if (z >= 6.0) return detail::erfcx_continued_fraction(z);
  if (z >= 0.0) return std::exp(z * z) * std::erfc(z);
  // erfcx(-z) = 2 exp(z^2) - erfcx(z); overflows to +inf below z ~ -26.6.
  if (z < -26.7) return std::numeric_limits<double>::infinity();
  return 2.0 * std::exp(z * z) - erfcx(-z);
}

// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace stickyflow
