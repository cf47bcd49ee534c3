#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "stickyflow/brownian.hpp"
#include "stickyflow/rng.hpp"
#include "stickyflow/time_grid.hpp"

namespace stickyflow {

struct StickyParams {
  double theta = 1.0;

  explicit StickyParams(double th) : theta(th) {
    if (!(theta > 0.0)) throw std::invalid_argument("StickyParams: theta must be > 0");
  }
  double lambda() const { return 2.0 * theta; }
};

// A sticky Brownian trajectory on an output grid, with boundary flags and
// (optionally) the reconstructed driving Brownian motion.
struct StickyPath {
  TimeGrid grid;
  std::vector<double> x;
  std::vector<std::uint8_t> at_zero;
  std::optional<BrownianPath> driver;
  std::uint64_t source_seed = 0;
  // boundary occupation inside each output step (filled by the time-change
  // construction; empty when unknown, e.g. for hand-built paths or walks)
  std::vector<double> step_zero_time;
  // fill-noise variance per step for driver reconstruction: boundary time
  // plus the bridge-variance deficit of interpolated partial source steps
  std::vector<double> step_fill_var;
};

struct OccupationSample {
  double t_horizon = 0.0;
  double value = 0.0;
};

// Time-change construction: X_t = R(A^{-1}(t)) with A(u) = u + L(u)/theta.
//
// L is carried as a right-continuous staircase jumping at grid knots: source
// step k contributes a unit-slope segment (R interpolated linearly) followed
// by a flat spot of width dL_k/theta at knot k+1, where R[k+1] == 0 exactly
// (local time only grows on running-minimum updates). Output times landing in
// a flat spot are on the boundary: X = 0 to machine precision, at_zero = true.
// A linear segment can also sit at zero end to end (monotone-down source
// path); the threshold eps0 = zero_detect_c * sqrt(dt_source) catches it.
inline StickyPath simulate_time_change(const ReflectedPath& reflected,
                                       const StickyParams& params,
                                       const TimeGrid& out_grid,
                                       double zero_detect_c = 0.01) {
  const std::size_t n_src = reflected.r.size();
  if (n_src == 0) throw std::invalid_argument("simulate_time_change: empty source path");
  const double du = reflected.grid.dt;
  const double a_end = reflected.grid.n_steps * du +
                       reflected.l[n_src - 1] / params.theta;
  if (out_grid.t_end() > a_end) {
    std::ostringstream msg;
    msg << "simulate_time_change: source path too short: A(u_max) = " << a_end
        << " < required horizon " << out_grid.t_end()
        << "; extend the source path beyond u_max = " << reflected.grid.t_end();
    throw std::invalid_argument(msg.str());
  }
  const double eps0 = zero_detect_c * std::sqrt(du);

  StickyPath out;
  out.grid = out_grid;
  out.x.resize(out_grid.n_points());
  out.at_zero.assign(out_grid.n_points(), 0);

  // Sweep the output times against the breakpoints B_k = k*du + L_k/theta.
  std::vector<double> u_star(out_grid.n_points());
  std::vector<double> frac(out_grid.n_points(), 0.0);
  std::size_t k = 0;
  double b_k = 0.0;  // B_k for current k
  for (std::size_t i = 0; i < out_grid.n_points(); ++i) {
    const double t = out_grid.time(i) - out_grid.t_start;
    while (k + 1 < n_src &&
           (k + 1) * du + reflected.l[k + 1] / params.theta <= t) {
      ++k;
      b_k = k * du + reflected.l[k] / params.theta;
    }
    double xv;
    bool zero;
    if (k + 1 >= n_src) {
      xv = reflected.r[n_src - 1];
      zero = xv <= eps0;
      u_star[i] = static_cast<double>(n_src - 1) * du;
    } else if (t < b_k + du) {
      // Linear segment of step k: u* = u_k + (t - B_k).
      const double f = (t - b_k) / du;
      xv = reflected.r[k] + f * (reflected.r[k + 1] - reflected.r[k]);
      zero = xv <= eps0;
      u_star[i] = k * du + (t - b_k);
      frac[i] = f;
    } else {
      // Flat spot at knot k+1: local time accrues while R sits at 0.
      xv = reflected.r[k + 1];
      zero = true;
      u_star[i] = static_cast<double>(k + 1) * du;
    }
    if (zero) xv = 0.0;
    out.x[i] = xv;
    out.at_zero[i] = zero ? 1 : 0;
  }
  // Moving zones consume source time 1:1 and flat spots consume none, so the
  // boundary time inside step i is dt minus the source time traversed. The
  // fill variance adds the interpolation deficit f(1-f)du at each partial
  // source step, which makes the reconstructed increments carry variance dt
  // exactly rather than dt - O(du).
  out.step_zero_time.resize(out_grid.n_steps);
  out.step_fill_var.resize(out_grid.n_steps);
  for (std::size_t i = 0; i < out_grid.n_steps; ++i) {
    const double z =
        std::clamp(out_grid.dt - (u_star[i + 1] - u_star[i]), 0.0, out_grid.dt);
    out.step_zero_time[i] = z;
    const double bridge =
        (frac[i] * (1.0 - frac[i]) + frac[i + 1] * (1.0 - frac[i + 1])) * du;
    out.step_fill_var[i] = z + bridge;
  }
  return out;
}

// Reconstructs a driving Brownian motion making (X, W) a weak solution.
//
// With the per-step boundary time z_i available (time-change paths), the
// decomposition X = x + int 1_{X>0} dW + theta * (boundary time) gives
//   dW_i = (dX_i - theta z_i) + sqrt(z_i) xi_i,
// where dX_i - theta z_i is the driver increment accumulated off the boundary
// (mean 0, variance dt - z_i) and the fresh Gaussian is the driver on the
// boundary (an independent Brownian segment, variance z_i). Without z data
// the rule degenerates to the per-step flags: dW = dX off the boundary, a
// fresh N(0, dt) draw on it. Fill-in noise is seeded by (seed, step index).
// A running offset keeps W = X - X_0 exact for paths that never touch 0.
inline BrownianPath reconstruct_driver(const StickyPath& path,
                                       const StickyParams& params,
                                       std::uint64_t seed) {
  BrownianPath w;
  w.grid = path.grid;
  w.seed = seed;
  w.values.resize(path.x.size());
  if (w.values.empty()) return w;
  w.values[0] = 0.0;
  const double dt = path.grid.dt;
  const double sd = std::sqrt(dt);
  const bool have_z = path.step_zero_time.size() == path.grid.n_steps &&
                      path.step_fill_var.size() == path.grid.n_steps;
  double offset = path.x[0];
  for (std::size_t i = 0; i + 1 < path.x.size(); ++i) {
    if (have_z) {
      const double z = path.step_zero_time[i];
      const double var = path.step_fill_var[i];
      if (var == 0.0) {
        w.values[i + 1] = path.x[i + 1] - offset;
      } else {
        const double dw = (path.x[i + 1] - path.x[i]) - params.theta * z +
                          std::sqrt(var) * gaussian_at(seed, 0xF11Eull, i);
        w.values[i + 1] = w.values[i] + snap_to_lattice(dw);
        offset = path.x[i + 1] - w.values[i + 1];
      }
    } else if (path.at_zero[i]) {
      w.values[i + 1] =
          w.values[i] + snap_to_lattice(sd * gaussian_at(seed, 0xF11Eull, i));
      offset = path.x[i + 1] - w.values[i + 1];
    } else {
      w.values[i + 1] = path.x[i + 1] - offset;
    }
  }
  return w;
}

inline OccupationSample occupation_time(const StickyPath& path, double t_horizon) {
  if (t_horizon > path.grid.t_end() - path.grid.t_start + 1e-12 * path.grid.dt)
    throw std::invalid_argument("occupation_time: horizon beyond path end");
  if (!(t_horizon >= 0.0)) throw std::invalid_argument("occupation_time: negative horizon");
  std::size_t count = 0;
  for (std::size_t i = 0; i < path.x.size(); ++i) {
    if (path.at_zero[i] && path.grid.time(i) - path.grid.t_start < t_horizon) ++count;
  }
  OccupationSample s;
  s.t_horizon = t_horizon;
  s.value = std::min(path.grid.dt * static_cast<double>(count), t_horizon);
  return s;
}

// Closed-form occupation law of a sticky Brownian motion started at 0:
// O_t has the law of (|N|/theta) sqrt(t + N^2/(4 theta^2)) - N^2/(2 theta^2).
// Derivation (inverse first-passage): P(O_t > a) = P(T_{a theta} < t - a) with
// T_l the inverse local time, T_l ~ l^2/N^2; inverting a -> a theta/sqrt(t-a)
// gives the expression. Nonnegative since squaring reduces it to t N^2 >= 0.
inline double occupation_law_value(const StickyParams& params, double t, double n) {
  const double th = params.theta;
  const double v = std::abs(n) / th * std::sqrt(t + n * n / (4.0 * th * th)) -
                   n * n / (2.0 * th * th);
  return std::max(v, 0.0);
}

inline OccupationSample sample_occupation_law(const StickyParams& params, double t,
                                              std::uint64_t seed) {
  if (!(t > 0.0)) throw std::invalid_argument("sample_occupation_law: t must be > 0");
  CounterRng rng(seed, /*stream=*/7);
  OccupationSample s;
  s.t_horizon = t;
  s.value = occupation_law_value(params, t, rng.next_gaussian());
  return s;
}

// Independent sticky-random-walk oracle on {0, h, 2h, ...} with time step h^2:
// +/-h with probability 1/2 from the interior, and from 0 a jump to h with
// probability q = theta*h (generator matching: q(f(h)-f(0))/h^2 -> theta f'(0)).
inline StickyPath simulate_sticky_walk(const StickyParams& params, double h,
                                       double t_horizon, std::uint64_t seed) {
  if (!(h > 0.0)) throw std::invalid_argument("simulate_sticky_walk: h must be > 0");
  const double q = params.theta * h;
  if (!(q < 1.0))
    throw std::invalid_argument("simulate_sticky_walk: requires theta*h < 1");
  const double dt = h * h;
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_horizon / dt - 1e-12));
  StickyPath out;
  out.grid = TimeGrid(0.0, dt, n_steps);
  out.source_seed = seed;
  out.x.resize(n_steps + 1);
  out.at_zero.resize(n_steps + 1);
  CounterRng rng(seed, /*stream=*/3);
  std::size_t state = 0;
  for (std::size_t i = 0; i <= n_steps; ++i) {
    out.x[i] = static_cast<double>(state) * h;
    out.at_zero[i] = state == 0 ? 1 : 0;
    if (i == n_steps) break;
    const double u = rng.next_unit();
    if (state == 0) {
      if (u < q) state = 1;
    } else {
      state = (u < 0.5) ? state + 1 : state - 1;
    }
  }
  return out;
}

}  // namespace stickyflow
