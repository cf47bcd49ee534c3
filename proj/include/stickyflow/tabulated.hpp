#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stickyflow {

// Uniform-grid table with local cubic (4-point Lagrange) interpolation.
// Used to cache expensive function values (e.g. G_f) inside nested quadratures.
class TabulatedFunction {
 public:
  TabulatedFunction() = default;
  TabulatedFunction(double x_lo, double x_hi, std::vector<double> values)
      : x_lo_(x_lo), x_hi_(x_hi), v_(std::move(values)) {
    if (v_.size() < 4) throw std::invalid_argument("TabulatedFunction: need >= 4 points");
    if (!(x_hi_ > x_lo_)) throw std::invalid_argument("TabulatedFunction: empty range");
    h_ = (x_hi_ - x_lo_) / static_cast<double>(v_.size() - 1);
  }

  template <typename F>
  static TabulatedFunction build(const F& f, double x_lo, double x_hi, std::size_t n) {
    std::vector<double> v(n);
    const double h = (x_hi - x_lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = f(x_lo + h * static_cast<double>(i));
    return TabulatedFunction(x_lo, x_hi, std::move(v));
  }

  double operator()(double x) const {
    const double s = (x - x_lo_) / h_;
    const auto n = v_.size();
    double js = std::floor(s);
    std::size_t j = s <= 0.0 ? 0 : std::min(static_cast<std::size_t>(js), n - 2);
    const std::size_t lo = j == 0 ? 0 : std::min(j - 1, n - 4);
    const double u = s - static_cast<double>(lo);
    // cubic Lagrange on nodes lo..lo+3 with local coordinates 0,1,2,3
    const double c0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    const double c1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    const double c2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    const double c3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    return c0 * v_[lo] + c1 * v_[lo + 1] + c2 * v_[lo + 2] + c3 * v_[lo + 3];
  }

  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }

 private:
  double x_lo_ = 0.0;
  double x_hi_ = 1.0;
  double h_ = 1.0;
  std::vector<double> v_;
};

}  // namespace stickyflow
