#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace stickyflow {

// 32-point Gauss-Legendre rule on [-1,1] (positive half; rule is symmetric).
// Abscissas/weights from the standard tables, 20 significant digits.
struct GaussLegendre32 {
  static constexpr std::size_t half = 16;
  static constexpr std::array<double, half> node = {
      0.048307665687738316235, 0.144471961582796493485, 0.239287362252137074545,
      0.331868602282127649780, 0.421351276130635345364, 0.506899908932229390024,
      0.587715757240762329041, 0.663044266930215200975, 0.732182118740289680387,
      0.794483795967942406963, 0.849367613732569970134, 0.896321155766052123965,
      0.934906075937739689171, 0.964762255587506430774, 0.985611511545268335400,
      0.997263861849481563545};
  static constexpr std::array<double, half> weight = {
      0.096540088514727800567, 0.095638720079274859419, 0.093844399080804565639,
      0.091173878695763884713, 0.087652093004403811143, 0.083311924226946755222,
      0.078193895787070306472, 0.072345794108848506225, 0.065822222776361846838,
      0.058684093478535547145, 0.050998059262376176196, 0.042835898022226680657,
      0.034273862913021433103, 0.025392065309262059456, 0.016274394730905670605,
      0.007018610009470096600};
};

// Integral of f over [a,b] with a single 32-point panel.
template <typename F>
double gl32_panel(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < GaussLegendre32::half; ++i) {
    const double x = h * GaussLegendre32::node[i];
    sum += GaussLegendre32::weight[i] * (f(c - x) + f(c + x));
  }
  return sum * h;
}

// Composite rule with a fixed panel count.
template <typename F>
double gl32_composite(const F& f, double a, double b, std::size_t n_panels) {
  if (n_panels == 0) throw std::invalid_argument("gl32_composite: n_panels == 0");
  const double w = (b - a) / static_cast<double>(n_panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < n_panels; ++p) {
    const double lo = a + w * static_cast<double>(p);
    sum += gl32_panel(f, lo, p + 1 == n_panels ? b : lo + w);
  }
  return sum;
}

// Panel-doubling adaptive composite: refines until two successive refinements
// differ by less than tol (absolute), starting from initial_panels.
template <typename F>
double gl32_adaptive(const F& f, double a, double b, double tol,
                     std::size_t initial_panels = 4, std::size_t max_doublings = 6) {
  if (!(b >= a)) throw std::invalid_argument("gl32_adaptive: b < a");
  if (a == b) return 0.0;
  std::size_t n = initial_panels == 0 ? 1 : initial_panels;
  double prev = gl32_composite(f, a, b, n);
  for (std::size_t k = 0; k < max_doublings; ++k) {
    n *= 2;
    const double cur = gl32_composite(f, a, b, n);
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace stickyflow
