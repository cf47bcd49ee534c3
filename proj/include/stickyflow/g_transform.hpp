#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "stickyflow/quadrature.hpp"
#include "stickyflow/test_function.hpp"

namespace stickyflow {

namespace detail {

// Panel count for the tilted window integral: panel width <= min(1/lambda, 1/2)
// keeps both the exponential tilt and the test functions resolved by GL32.
inline std::size_t tilted_panels(double lambda, double a, double b) {
  const double width = std::min(1.0 / std::max(lambda, 1e-12), 0.5);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / width)));
}

// integral_a^b f(u) e^{-lambda (z - u)} du, assembled so the exponent is
// always <= 0 (never forms e^{+lambda u} on its own).
template <typename F>
double tilted_integral(const F& f, double lambda, double a, double b, double z) {
  if (b <= a) return 0.0;
  const auto integrand = [&](double u) { return f(u) * std::exp(-lambda * (z - u)); };
  return gl32_composite(integrand, a, b, tilted_panels(lambda, a, b));
}

}  // namespace detail

// G_f(y) = f(0) e^{-lambda y} + lambda integral_0^y f(u) e^{-lambda (y-u)} du,
// lambda = 2 theta; equivalently E[f((y-T)^+)] with T ~ Exp(lambda).
template <typename F>
double g_transform_fn(const F& f, double theta, double y) {
  if (!(y >= 0.0)) throw std::invalid_argument("g_transform: y must be >= 0");
  const double lambda = 2.0 * theta;
  if (y == 0.0) return f(0.0);
  return f(0.0) * std::exp(-lambda * y) +
         lambda * detail::tilted_integral(f, lambda, 0.0, y, y);
}

inline double g_transform(const TestFunction& f, double theta, double y) {
  return g_transform_fn(f.f, theta, y);
}

// (G_f)'(y): differentiating the window form collapses to
// lambda (f(y) - G_f(y)); in particular (G_f)'(0+) = 0.
template <typename F>
double g_transform_prime_fn(const F& f, double theta, double y) {
  if (!(y >= 0.0)) throw std::invalid_argument("g_transform_prime: y must be >= 0");
  return 2.0 * theta * (f(y) - g_transform_fn(f, theta, y));
}

inline double g_transform_prime(const TestFunction& f, double theta, double y) {
  return g_transform_prime_fn(f.f, theta, y);
}

// (G_f)''(y) = lambda f'(y) - lambda^2 f(y) + lambda^2 G_f(y).
inline double g_transform_second(const TestFunction& f, double theta, double y) {
  const double lambda = 2.0 * theta;
  return lambda * f.df(y) - lambda * lambda * f.f(y) +
         lambda * lambda * g_transform_fn(f.f, theta, y);
}

// G applied to f' 1_{(0,inf)}: the value at 0 of the transformed function is 0,
// so only the window integral survives.
inline double g_transform_dplus(const TestFunction& f, double theta, double y) {
  if (!(y >= 0.0)) throw std::invalid_argument("g_transform_dplus: y must be >= 0");
  const double lambda = 2.0 * theta;
  if (y == 0.0) return 0.0;
  return lambda * detail::tilted_integral([&](double u) { return f.df(u); },
                                          lambda, 0.0, y, y);
}

// G applied to f'' (no indicator; the value f''(0) enters the atom term).
inline double g_transform_second_arg(const TestFunction& f, double theta, double y) {
  return g_transform_fn([&](double u) { return f.d2f(u); }, theta, y);
}

struct IntertwineErrors {
  double err1 = 0.0;  // max_y |G_{f' 1} (y) - (G_f)'(y)|
  double err2 = 0.0;  // max_y |G_{f''}(y) - (G_f)''(y)|
};

// The first identity holds for any C^1 function; the second needs the D(A)
// boundary condition f''(0) = 2 theta f'(0) (negative controls rely on that).
inline IntertwineErrors g_intertwine_check(const TestFunction& f, double theta,
                                           const std::vector<double>& y_grid) {
  IntertwineErrors e;
  for (double y : y_grid) {
    e.err1 = std::max(e.err1, std::abs(g_transform_dplus(f, theta, y) -
                                       g_transform_prime(f, theta, y)));
    e.err2 = std::max(e.err2, std::abs(g_transform_second_arg(f, theta, y) -
                                       g_transform_second(f, theta, y)));
  }
  return e;
}

}  // namespace stickyflow
