#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "stickyflow/parallel.hpp"
#include "stickyflow/semigroup.hpp"
#include "stickyflow/special_functions.hpp"

namespace stickyflow {

// Uniform space grid on [0, x_max] with node 0 carrying the boundary slot:
// function vectors store values at the nodes, and the transition atom at 0
// enters propagator matrices through column 0.
struct SpaceGrid {
  double x_max = 8.0;
  std::size_t m = 200;

  SpaceGrid() = default;
  SpaceGrid(double x_max_, std::size_t m_) : x_max(x_max_), m(m_) {
    if (!(x_max > 0.0)) throw std::invalid_argument("SpaceGrid: x_max must be > 0");
    if (m < 16) throw std::invalid_argument("SpaceGrid: need at least 16 nodes");
  }
  double h() const { return x_max / static_cast<double>(m - 1); }
  double node(std::size_t j) const { return h() * static_cast<double>(j); }
};

namespace detail {

// Moments of the Gaussian density with mean c and variance tau over [0, h]:
// I_q = integral_0^h xi^q phi_c(xi) dxi, q = 0..3, by the standard recurrence.
inline void gauss_cell_moments(double c, double tau, double h, double* out) {
  const double s = std::sqrt(tau);
  const double inv = 1.0 / (s * std::numbers::sqrt2);
  const double phi0 = std::exp(-c * c / (2.0 * tau)) /
                      (s * std::sqrt(2.0 * std::numbers::pi));
  const double phih = std::exp(-(h - c) * (h - c) / (2.0 * tau)) /
                      (s * std::sqrt(2.0 * std::numbers::pi));
  out[0] = 0.5 * (std::erf((h - c) * inv) + std::erf(c * inv));
  out[1] = c * out[0] - tau * (phih - phi0);
  out[2] = c * out[1] + tau * out[0] - tau * h * phih;
  out[3] = c * out[2] + 2.0 * tau * out[1] - tau * h * h * phih;
}

// Moments of -phi_c'(xi) = ((xi - c)/tau) phi_c(xi) over [0, h].
inline void gauss_deriv_cell_moments(double c, double tau, double h, const double* gauss,
                                     double* out) {
  const double phi0 = std::exp(-c * c / (2.0 * tau)) /
                      std::sqrt(2.0 * std::numbers::pi * tau);
  const double phih = std::exp(-(h - c) * (h - c) / (2.0 * tau)) /
                      std::sqrt(2.0 * std::numbers::pi * tau);
  out[0] = phi0 - phih;
  out[1] = gauss[0] - h * phih;
  out[2] = 2.0 * gauss[1] - h * h * phih;
  out[3] = 3.0 * gauss[2] - h * h * h * phih;
}

// Moments of g_tau(sigma + xi) over [0, h], via g' = 2 theta (g - p_tau(0, .)):
// the recurrence needs the Gaussian moments with mean -sigma.
inline void g_cell_moments(double theta, double tau, double sigma, double h,
                           const double* gauss_msigma, double* out) {
  const double g_hi = g_fn(theta, tau, sigma + h);
  const double g_lo = g_fn(theta, tau, sigma);
  out[0] = (g_hi - g_lo) / (2.0 * theta) + gauss_msigma[0];
  double hq = h;
  for (int q = 1; q <= 3; ++q) {
    out[q] = (hq * g_hi - q * out[q - 1]) / (2.0 * theta) + gauss_msigma[q];
    hq *= h;
  }
}

// Cubic Lagrange coefficients: weights[k][q] expresses the k-th stencil basis
// polynomial as sum_q weights[k][q] xi^q with xi measured from the cell left.
inline std::array<std::array<double, 4>, 4> lagrange_coeffs(
    const std::array<double, 4>& offsets) {
  std::array<std::array<double, 4>, 4> a{};
  for (int k = 0; k < 4; ++k) {
    double roots[3];
    int idx = 0;
    double denom = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j == k) continue;
      roots[idx++] = offsets[j];
      denom *= offsets[k] - offsets[j];
    }
    const double r0 = roots[0], r1 = roots[1], r2 = roots[2];
    a[k][3] = 1.0 / denom;
    a[k][2] = -(r0 + r1 + r2) / denom;
    a[k][1] = (r0 * r1 + r0 * r2 + r1 * r2) / denom;
    a[k][0] = -(r0 * r1 * r2) / denom;
  }
  return a;
}

}  // namespace detail

// Dense propagator matrices sampled on a SpaceGrid by product integration:
// each row integrates the analytic kernel against piecewise-cubic
// interpolation of the target function, so row sums reproduce the kernel's
// exact total mass (constant functions are propagated exactly up to the
// truncation closure, which assigns the [x_max, inf) tail to the last node).
//
// Vectors carry dim() = m + 1 entries: index 0 is the explicit atom slot (the
// function's value AT the boundary point {0}), indices 1..m are the node
// values, where node 0 stores the right-limit at 0+. The two coincide for
// continuous functions but differ after a D = 1_{(0,inf)} d/dx application,
// which zeroes only the atom slot: the transition density never sees the
// single-point modification, the boundary atom does.
//
// p[k-1]  : f |-> P_{k delta} f        (k = 1..n_steps)
// dp[k-1] : f |-> D P_{k delta} f, analytic derivative kernels under the
//           integral; the sticky version zeroes the output atom slot, the
//           reflected version (D+ = d/dx) keeps it.
struct PropagatorSet {
  SpaceGrid grid;
  double theta = 1.0;  // ignored when reflected
  double delta = 0.0;
  std::size_t n_steps = 0;
  bool reflected = false;
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> dp;

  std::size_t dim() const { return grid.m + 1; }
  const std::vector<double>& p_k(std::size_t k) const { return p.at(k - 1); }
  const std::vector<double>& dp_k(std::size_t k) const { return dp.at(k - 1); }

  // function -> vector: atom slot plus node values
  template <typename F>
  std::vector<double> sample(const F& f) const {
    std::vector<double> v(dim());
    v[0] = f(0.0);
    for (std::size_t j = 0; j < grid.m; ++j) v[1 + j] = f(grid.node(j));
    return v;
  }

  // max over rows of |row * 1 - 1| for P_{k delta}
  double conservativity_error(std::size_t k) const {
    const auto& mat = p_k(k);
    const std::size_t md = dim();
    double worst = 0.0;
    for (std::size_t i = 0; i < md; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < md; ++j) s += mat[i * md + j];
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }
};

inline void matvec(const std::vector<double>& mat, const std::vector<double>& v,
                   std::vector<double>& out) {
  const std::size_t m = v.size();
  out.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = mat.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
    out[i] = s;
  }
}

namespace detail {

struct KernelMoments {
  double density[4];
  double deriv[4];
};

// Cell moments (relative to the cell's left edge y_c) of the transition
// density and its x-derivative for row x, time tau.
inline KernelMoments sticky_cell_moments(double theta, double tau, double x, double y_c,
                                         double h) {
  KernelMoments mm{};
  double i1[4], i2[4], d1[4], d2[4], gm[4];
  const double c1 = x - y_c;
  const double c2 = -(x + y_c);
  gauss_cell_moments(c1, tau, h, i1);
  gauss_cell_moments(c2, tau, h, i2);
  gauss_deriv_cell_moments(c1, tau, h, i1, d1);
  gauss_deriv_cell_moments(c2, tau, h, i2, d2);
  g_cell_moments(theta, tau, x + y_c, h, i2, gm);
  for (int q = 0; q < 4; ++q) {
    mm.density[q] = i1[q] - i2[q] + 2.0 * gm[q];
    mm.deriv[q] = d1[q] + d2[q] + 4.0 * theta * (gm[q] - i2[q]);
  }
  return mm;
}

inline KernelMoments reflected_cell_moments(double tau, double x, double y_c, double h) {
  KernelMoments mm{};
  double i1[4], i2[4], d1[4], d2[4];
  const double c1 = x - y_c;
  const double c2 = -(x + y_c);
  gauss_cell_moments(c1, tau, h, i1);
  gauss_cell_moments(c2, tau, h, i2);
  gauss_deriv_cell_moments(c1, tau, h, i1, d1);
  gauss_deriv_cell_moments(c2, tau, h, i2, d2);
  for (int q = 0; q < 4; ++q) {
    mm.density[q] = i1[q] + i2[q];
    mm.deriv[q] = d1[q] - d2[q];
  }
  return mm;
}

inline void build_matrices(const SpaceGrid& grid, double theta, double tau,
                           bool reflected, std::vector<double>& pmat,
                           std::vector<double>& dpmat) {
  const std::size_t m = grid.m;
  const std::size_t md = m + 1;  // atom slot + nodes
  const double h = grid.h();
  const double y_max = grid.x_max;
  const double sd = std::sqrt(tau);
  const double span = 14.0 * sd;

  const auto interior = lagrange_coeffs({-h, 0.0, h, 2.0 * h});
  const auto first = lagrange_coeffs({0.0, h, 2.0 * h, 3.0 * h});
  const auto last = lagrange_coeffs({-2.0 * h, -h, 0.0, h});

  pmat.assign(md * md, 0.0);
  dpmat.assign(md * md, 0.0);

  for (std::size_t i = 0; i < m; ++i) {
    const double x = grid.node(i);
    double* prow = pmat.data() + (1 + i) * md;
    double* dprow = dpmat.data() + (1 + i) * md;

    for (std::size_t c = 0; c + 1 < m; ++c) {
      const double y_c = grid.node(c);
      // skip cells where every kernel piece is below ~1e-43 of scale
      const double dist_diag = std::max(0.0, std::abs(x - (y_c + 0.5 * h)) - 0.5 * h);
      if (dist_diag > span && x + y_c > span) continue;

      const KernelMoments mm = reflected
                                   ? reflected_cell_moments(tau, x, y_c, h)
                                   : sticky_cell_moments(theta, tau, x, y_c, h);
      const auto& coeff = c == 0 ? first : (c == m - 2 ? last : interior);
      const std::size_t stencil_lo = c == 0 ? 0 : (c == m - 2 ? m - 4 : c - 1);
      for (int k = 0; k < 4; ++k) {
        double wp = 0.0, wd = 0.0;
        for (int q = 0; q < 4; ++q) {
          wp += coeff[k][q] * mm.density[q];
          wd += coeff[k][q] * mm.deriv[q];
        }
        prow[1 + stencil_lo + k] += wp;
        dprow[1 + stencil_lo + k] += wd;
      }
    }

    // truncation closure: the [x_max, inf) tail mass acts on the last node
    const double inv = 1.0 / (sd * std::numbers::sqrt2);
    const double p_lo = heat_kernel(tau, y_max - x);
    const double p_hi = heat_kernel(tau, y_max + x);
    if (reflected) {
      prow[md - 1] += 0.5 * std::erfc((y_max - x) * inv) +
                      0.5 * std::erfc((y_max + x) * inv);
      dprow[md - 1] += p_lo - p_hi;
    } else {
      prow[md - 1] += 0.5 * std::erfc((y_max - x) * inv) +
                      0.5 * std::erfc((y_max + x) * inv) -
                      g_fn(theta, tau, x + y_max) / theta;
      dprow[md - 1] += p_lo + p_hi - 2.0 * g_fn(theta, tau, x + y_max);
      // the boundary atom and its x-derivative read the atom slot
      prow[0] += g_fn(theta, tau, x) / theta;
      dprow[0] += 2.0 * (g_fn(theta, tau, x) - heat_kernel(tau, x));
    }
  }

  // outputs are continuous in x: the output atom slot equals the value at the
  // 0 node, except that D zeroes it for the sticky version
  std::copy(pmat.begin() + md, pmat.begin() + 2 * md, pmat.begin());
  if (reflected) {
    std::copy(dpmat.begin() + md, dpmat.begin() + 2 * md, dpmat.begin());
  }
}

}  // namespace detail

inline PropagatorSet build_propagators(double theta, double t, std::size_t n_steps,
                                       const SpaceGrid& grid, unsigned threads = 0) {
  if (!(theta > 0.0)) throw std::invalid_argument("build_propagators: theta must be > 0");
  if (!(t > 0.0)) throw std::invalid_argument("build_propagators: t must be > 0");
  if (n_steps == 0 || n_steps > 512)
    throw std::invalid_argument(
        "build_propagators: n_steps must be in [1, 512] (cost guard)");
  PropagatorSet set;
  set.grid = grid;
  set.theta = theta;
  set.delta = t / static_cast<double>(n_steps);
  set.n_steps = n_steps;
  set.reflected = false;
  set.p.resize(n_steps);
  set.dp.resize(n_steps);
  parallel_for(n_steps, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k)
      detail::build_matrices(grid, theta, set.delta * static_cast<double>(k + 1), false,
                             set.p[k], set.dp[k]);
  });
  return set;
}

inline PropagatorSet build_reflected_propagators(double t, std::size_t n_steps,
                                                 const SpaceGrid& grid,
                                                 unsigned threads = 0) {
  if (!(t > 0.0))
    throw std::invalid_argument("build_reflected_propagators: t must be > 0");
  if (n_steps == 0 || n_steps > 512)
    throw std::invalid_argument(
        "build_reflected_propagators: n_steps must be in [1, 512] (cost guard)");
  PropagatorSet set;
  set.grid = grid;
  set.theta = 0.0;
  set.delta = t / static_cast<double>(n_steps);
  set.n_steps = n_steps;
  set.reflected = true;
  set.p.resize(n_steps);
  set.dp.resize(n_steps);
  parallel_for(n_steps, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k)
      detail::build_matrices(grid, 0.0, set.delta * static_cast<double>(k + 1), true,
                             set.p[k], set.dp[k]);
  });
  return set;
}

}  // namespace stickyflow
