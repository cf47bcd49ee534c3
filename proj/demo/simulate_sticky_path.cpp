// Simulates one sticky Brownian path with its reconstructed driver and writes
// the trajectory as CSV (t, X, at_zero, W).
//
//   ./simulate_sticky_path [theta] [t] [steps] [seed] > path.csv

#include <cstdlib>
#include <iostream>

#include "stickyflow/stickyflow.hpp"

int main(int argc, char** argv) {
  using namespace stickyflow;
  const double theta = argc > 1 ? std::atof(argv[1]) : 1.0;
  const double t = argc > 2 ? std::atof(argv[2]) : 1.0;
  const std::size_t steps = argc > 3 ? std::atoi(argv[3]) : 2000;
  const std::uint64_t seed = argc > 4 ? std::atoll(argv[4]) : 1;

  const StickyParams params(theta);
  const TimeGrid out_grid(0.0, t / steps, steps);
  const TimeGrid src_grid(0.0, t / (8 * steps), 8 * steps);
  const auto source = sample_brownian(src_grid, seed);
  auto sticky = simulate_time_change(reflect(source), params, out_grid);
  sticky.driver = reconstruct_driver(sticky, params, seed + 1);

  std::cout << "t,X,at_zero,W\n";
  for (std::size_t i = 0; i < sticky.x.size(); ++i) {
    std::cout << csv_num(out_grid.time(i)) << "," << csv_num(sticky.x[i]) << ","
              << int(sticky.at_zero[i]) << "," << csv_num(sticky.driver->values[i])
              << "\n";
  }
  const auto occ = occupation_time(sticky, t);
  std::cerr << "occupation time at 0 up to t=" << t << ": " << occ.value << "\n";
  return 0;
}
