#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "stickyflow/quadrature.hpp"
#include "stickyflow/special_functions.hpp"
#include "stickyflow/tabulated.hpp"
#include "stickyflow/test_function.hpp"

namespace stickyflow {

struct SemigroupParams {
  double theta;
  double t;
  SemigroupParams(double theta_, double t_) : theta(theta_), t(t_) {
    if (!(theta > 0.0)) throw std::invalid_argument("SemigroupParams: theta must be > 0");
    if (!(t > 0.0)) throw std::invalid_argument("SemigroupParams: t must be > 0");
  }
};

// Gaussian heat kernel p_t(0, w).
inline double heat_kernel(double t, double w) {
  return std::exp(-w * w / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

// g_t(x) = theta exp(2 theta x + 2 theta^2 t) erfc(x/sqrt(2t) + theta sqrt(2t)),
// evaluated in the scaled form theta * erfcx(z) * exp(-x^2/(2t)) with
// z = x/sqrt(2t) + theta sqrt(2t)  (z^2 - x^2/(2t) = 2 theta x + 2 theta^2 t).
inline double g_fn(double theta, double t, double x) {
  if (!(t > 0.0)) throw std::invalid_argument("g_fn: t must be > 0");
  const double s = std::sqrt(2.0 * t);
  const double z = x / s + theta * s;
  return theta * erfcx(z) * std::exp(-x * x / (2.0 * t));
}

// First and second x-derivatives, differentiated directly through the scaled
// product form (erfcx'(z) = 2 z erfcx(z) - 2/sqrt(pi)). The alternative
// expressions g' = 2 theta (g - p_t(0,x)) and the Lemma-level ODE
// g'' = 2 theta g' + 2 theta (x/t) p_t(0,x) are used as test cross-checks.
inline double g_fn_prime(double theta, double t, double x) {
  if (!(t > 0.0)) throw std::invalid_argument("g_fn_prime: t must be > 0");
  const double s = std::sqrt(2.0 * t);
  const double z = x / s + theta * s;
  const double u = erfcx(z);
  const double up = (2.0 * z * u - 2.0 * std::numbers::inv_sqrtpi) / s;
  const double v = std::exp(-x * x / (2.0 * t));
  const double vp = -(x / t) * v;
  return theta * (up * v + u * vp);
}

inline double g_fn_second(double theta, double t, double x) {
  if (!(t > 0.0)) throw std::invalid_argument("g_fn_second: t must be > 0");
  const double s = std::sqrt(2.0 * t);
  const double z = x / s + theta * s;
  const double u = erfcx(z);
  const double up = (2.0 * z * u - 2.0 * std::numbers::inv_sqrtpi) / s;
  const double upp = (2.0 * u / s + 2.0 * z * up) / s;
  const double v = std::exp(-x * x / (2.0 * t));
  const double vp = -(x / t) * v;
  const double vpp = v * (x * x / (t * t) - 1.0 / t);
  return theta * (upp * v + 2.0 * up * vp + u * vpp);
}

// Density part of P_t(x, dy) for y > 0 and the atom at y = 0.
inline double density(double theta, double t, double x, double y) {
  return heat_kernel(t, y - x) - heat_kernel(t, y + x) + 2.0 * g_fn(theta, t, x + y);
}

inline double atom_mass(double theta, double t, double x) {
  return g_fn(theta, t, x) / theta;
}

inline double density_dx(double theta, double t, double x, double y) {
  return ((y - x) / t) * heat_kernel(t, y - x) + ((y + x) / t) * heat_kernel(t, y + x) +
         2.0 * g_fn_prime(theta, t, x + y);
}

inline double density_dxx(double theta, double t, double x, double y) {
  const auto p2 = [&](double w) { return (w * w / (t * t) - 1.0 / t) * heat_kernel(t, w); };
  return p2(y - x) - p2(y + x) + 2.0 * g_fn_second(theta, t, x + y);
}

struct TransitionKernel {
  SemigroupParams params;
  double density_at(double x, double y) const {
    return density(params.theta, params.t, x, y);
  }
  double atom_at(double x) const { return atom_mass(params.theta, params.t, x); }
};

inline TransitionKernel make_kernel(double theta, double t) {
  return TransitionKernel{SemigroupParams(theta, t)};
}

namespace detail {

// Integration windows for integrals against P_t(x, dy)-type kernels: one
// window around the diagonal y ~ x (heat kernel width sqrt(t)) and one near
// the boundary y ~ 0 (the g and image terms). Outside them the integrand is
// below 1e-40 of scale.
struct Windows {
  double a1 = 0.0, b1 = 0.0;  // boundary window
  double a2 = 0.0, b2 = 0.0;  // diagonal window (b2 <= a2 when merged)
};

inline Windows integration_windows(double t, double x, double span = 14.0) {
  const double w = span * std::sqrt(t);
  Windows win;
  const double lo = std::max(0.0, x - w);
  const double hi = x + w;
  if (lo <= w) {  // windows overlap: single interval [0, hi]
    win.a1 = 0.0;
    win.b1 = hi;
  } else {
    win.a1 = 0.0;
    win.b1 = w;
    win.a2 = lo;
    win.b2 = hi;
  }
  return win;
}

template <typename F>
double integrate_windows(const F& f, double t, double x, double tol) {
  const Windows win = integration_windows(t, x);
  const double panel = std::max(std::sqrt(t) / 2.0, 1e-8);
  const auto panels_for = [&](double a, double b) {
    return std::max<std::size_t>(
        4, static_cast<std::size_t>(std::ceil((b - a) / panel)));
  };
  double total = gl32_adaptive(f, win.a1, win.b1, tol, panels_for(win.a1, win.b1));
  if (win.b2 > win.a2)
    total += gl32_adaptive(f, win.a2, win.b2, tol, panels_for(win.a2, win.b2));
  return total;
}

}  // namespace detail

// P_t f(x) = atom(x) f(0) + integral density(x,y) f(y) dy.
template <typename F>
double apply_fn(const TransitionKernel& k, const F& f, double x, double tol = 1e-10) {
  if (!(x >= 0.0)) throw std::invalid_argument("apply: x must be >= 0");
  const double th = k.params.theta, t = k.params.t;
  const double integral = detail::integrate_windows(
      [&](double y) { return density(th, t, x, y) * f(y); }, t, x, tol);
  return atom_mass(th, t, x) * f(0.0) + integral;
}

inline double apply(const TransitionKernel& k, const TestFunction& f, double x,
                    double tol = 1e-10) {
  return apply_fn(k, f.f, x, tol);
}

// (P_t f)'(x), analytic derivative kernels under the integral.
template <typename F>
double apply_prime_fn(const TransitionKernel& k, const F& f, double x,
                      double tol = 1e-10) {
  if (!(x >= 0.0)) throw std::invalid_argument("apply_prime: x must be >= 0");
  const double th = k.params.theta, t = k.params.t;
  const double integral = detail::integrate_windows(
      [&](double y) { return density_dx(th, t, x, y) * f(y); }, t, x, tol);
  return g_fn_prime(th, t, x) / th * f(0.0) + integral;
}

inline double apply_prime(const TransitionKernel& k, const TestFunction& f, double x,
                          double tol = 1e-10) {
  return apply_prime_fn(k, f.f, x, tol);
}

inline double apply_second(const TransitionKernel& k, const TestFunction& f, double x,
                           double tol = 1e-10) {
  if (!(x >= 0.0)) throw std::invalid_argument("apply_second: x must be >= 0");
  const double th = k.params.theta, t = k.params.t;
  const double integral = detail::integrate_windows(
      [&](double y) { return density_dxx(th, t, x, y) * f.f(y); }, t, x, tol);
  return g_fn_second(th, t, x) / th * f.f(0.0) + integral;
}

// Reflected-BM semigroup P+_t (method of images); theta accepted and ignored
// for interface uniformity.
inline double reflected_density(double t, double x, double y) {
  return heat_kernel(t, y - x) + heat_kernel(t, y + x);
}

inline double reflected_density_dx(double t, double x, double y) {
  return ((y - x) / t) * heat_kernel(t, y - x) - ((y + x) / t) * heat_kernel(t, y + x);
}

template <typename F>
double reflected_apply_fn(double /*theta_unused*/, double t, const F& f, double x,
                          double tol = 1e-10) {
  if (!(t > 0.0)) throw std::invalid_argument("reflected_apply: t must be > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("reflected_apply: x must be >= 0");
  return detail::integrate_windows(
      [&](double y) { return reflected_density(t, x, y) * f(y); }, t, x, tol);
}

inline double reflected_apply(double theta_unused, double t, const TestFunction& f,
                              double x, double tol = 1e-10) {
  return reflected_apply_fn(theta_unused, t, f.f, x, tol);
}

// max_x |P_{s+t} f(x) - P_s(P_t f)(x)| over x_grid. drop_atom omits the atom
// term of the outer P_s application (negative control). s == 0 or t == 0
// returns 0 by the P_0 = identity convention.
inline double chapman_check(double theta, double s, double t, const TestFunction& f,
                            const std::vector<double>& x_grid, bool drop_atom = false,
                            double tol = 1e-10) {
  if (s == 0.0 || t == 0.0) return 0.0;
  const TransitionKernel ks = make_kernel(theta, s);
  const TransitionKernel kt = make_kernel(theta, t);
  const TransitionKernel kst = make_kernel(theta, s + t);
  const auto inner = [&](double y) { return apply(kt, f, y, tol); };
  double max_err = 0.0;
  for (double x : x_grid) {
    const double direct = apply(kst, f, x, tol);
    const double integral = detail::integrate_windows(
        [&](double y) { return density(theta, s, x, y) * inner(y); }, s, x, tol);
    double composed = integral;
    if (!drop_atom) composed += atom_mass(theta, s, x) * inner(0.0);
    max_err = std::max(max_err, std::abs(direct - composed));
  }
  return max_err;
}

// CDF of the positive part of P_t(0, dy) (density 2 g_t(y)), built by
// quadrature: cumulative per-cell GL32 integrals on a fine table, cubic
// interpolation between knots. The closed form
// (g_t(y) - g_t(0))/theta + erf(y/sqrt(2t)) is kept in the tests as the
// independent route.
inline std::function<double(double)> positive_part_cdf(double theta, double t,
                                                       std::size_t table_size = 4096) {
  const double total = 1.0 - atom_mass(theta, t, 0.0);
  const double y_hi = 16.0 * std::sqrt(t);
  std::vector<double> cum(table_size);
  cum[0] = 0.0;
  const double h = y_hi / static_cast<double>(table_size - 1);
  for (std::size_t i = 1; i < table_size; ++i) {
    const double a = h * static_cast<double>(i - 1);
    cum[i] = cum[i - 1] +
             gl32_panel([&](double w) { return 2.0 * g_fn(theta, t, w); }, a, a + h);
  }
  TabulatedFunction table(0.0, y_hi, std::move(cum));
  return [table, total, y_hi](double y) {
    if (y <= 0.0) return 0.0;
    if (y >= y_hi) return 1.0;
    return std::clamp(table(y) / total, 0.0, 1.0);
  };
}

}  // namespace stickyflow
