#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stickyflow/rng.hpp"
#include "stickyflow/time_grid.hpp"

namespace stickyflow {

// A Brownian driving path W on a uniform grid, W[0] = 0. Values live on the
// 2^-32 dyadic lattice (see snap_to_lattice), so differences and running
// minima of path values are exact doubles.
struct BrownianPath {
  TimeGrid grid;
  std::vector<double> values;
  std::uint64_t seed = 0;

  std::size_t n_points() const { return values.size(); }
};

// Reflected path R = W - running min(W) with local time L = -running min(W)
// (Levy's identification). Satisfies R = W + L pointwise, exactly.
struct ReflectedPath {
  TimeGrid grid;
  std::vector<double> r;
  std::vector<double> l;
};

inline BrownianPath sample_brownian(const TimeGrid& grid, std::uint64_t seed) {
  BrownianPath path;
  path.grid = grid;
  path.seed = seed;
  path.values.resize(grid.n_points());
  path.values[0] = 0.0;
  CounterRng rng(seed, /*stream=*/0);
  const double sd = std::sqrt(grid.dt);
  for (std::size_t i = 0; i < grid.n_steps; ++i) {
    path.values[i + 1] = path.values[i] + snap_to_lattice(sd * rng.next_gaussian());
  }
  return path;
}

inline ReflectedPath reflect(const BrownianPath& path) {
  ReflectedPath out;
  out.grid = path.grid;
  out.r.resize(path.values.size());
  out.l.resize(path.values.size());
  double run_min = 0.0;  // W[0] = 0, so the running min starts at 0
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    run_min = std::min(run_min, path.values[i]);
    out.r[i] = path.values[i] - run_min;
    out.l[i] = -run_min;
  }
  return out;
}

inline double shifted_increment(const BrownianPath& path, std::size_t s_index,
                                std::size_t t_index) {
  if (s_index > t_index)
    throw std::invalid_argument("shifted_increment: s_index must be <= t_index");
  if (t_index >= path.values.size())
    throw std::out_of_range("shifted_increment: index beyond path");
  return path.values[t_index] - path.values[s_index];
}

// First grid index u >= s_index with x + W[u] - W[s] <= 0, i.e. the hitting
// time of 0 by the path started at x, resolved at grid resolution.
inline std::optional<std::size_t> hitting_index(const BrownianPath& path,
                                                std::size_t s_index, double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("hitting_index: x must be >= 0");
  if (s_index >= path.values.size())
    throw std::out_of_range("hitting_index: s_index beyond path");
  const double level = path.values[s_index] - x;
  for (std::size_t u = s_index; u < path.values.size(); ++u) {
    if (path.values[u] <= level) return u;
  }
  return std::nullopt;
}

// Variant with the Brownian-bridge crossing correction: a step with endpoints
// a, b > 0 above the level still crosses it with probability exp(-2ab/dt).
// Off by default everywhere; grid bias is handled by refinement instead.
inline std::optional<std::size_t> hitting_index_bridged(const BrownianPath& path,
                                                        std::size_t s_index, double x,
                                                        CounterRng& rng) {
  if (!(x >= 0.0)) throw std::invalid_argument("hitting_index_bridged: x must be >= 0");
  if (s_index >= path.values.size())
    throw std::out_of_range("hitting_index_bridged: s_index beyond path");
  const double level = path.values[s_index] - x;
  if (path.values[s_index] <= level) return s_index;
  for (std::size_t u = s_index + 1; u < path.values.size(); ++u) {
    if (path.values[u] <= level) return u;
    const double a = path.values[u - 1] - level;
    const double b = path.values[u] - level;
    if (rng.next_unit() < std::exp(-2.0 * a * b / path.grid.dt)) return u;
  }
  return std::nullopt;
}

// Brownian-bridge refinement: returns a path on dt/factor agreeing with the
// input at coarse points; fill-in is sampled sequentially from the bridge law.
inline BrownianPath refine(const BrownianPath& path, std::size_t factor,
                           std::uint64_t seed) {
  if (factor < 2) throw std::invalid_argument("refine: factor must be >= 2");
  BrownianPath out;
  out.grid = TimeGrid(path.grid.t_start, path.grid.dt / static_cast<double>(factor),
                      path.grid.n_steps * factor);
  out.seed = seed;
  out.values.resize(out.grid.n_points());
  CounterRng rng(seed, /*stream=*/1);
  const double dt_f = out.grid.dt;
  for (std::size_t i = 0; i < path.grid.n_steps; ++i) {
    const double b = path.values[i + 1];
    double v = path.values[i];
    out.values[i * factor] = v;
    for (std::size_t k = 1; k < factor; ++k) {
      const double m = static_cast<double>(factor - k + 1);
      const double mean = v + (b - v) / m;
      const double var = dt_f * (m - 1.0) / m;
      v = snap_to_lattice(mean + std::sqrt(var) * rng.next_gaussian());
      out.values[i * factor + k] = v;
    }
  }
  out.values[out.grid.n_steps] = path.values[path.grid.n_steps];
  return out;
}

}  // namespace stickyflow
