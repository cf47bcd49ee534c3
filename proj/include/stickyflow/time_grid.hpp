#pragma once

#include <cstddef>
#include <stdexcept>

namespace stickyflow {

// Uniform time grid t_i = t_start + i*dt, i = 0..n_steps.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 1.0;
  std::size_t n_steps = 0;

  TimeGrid() = default;
  TimeGrid(double start, double step, std::size_t steps)
      : t_start(start), dt(step), n_steps(steps) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
    if (!(t_start >= 0.0)) throw std::invalid_argument("TimeGrid: t_start must be >= 0");
  }

  std::size_t n_points() const { return n_steps + 1; }
  double time(std::size_t i) const { return t_start + static_cast<double>(i) * dt; }
  double t_end() const { return time(n_steps); }

  bool operator==(const TimeGrid&) const = default;
};

}  // namespace stickyflow
