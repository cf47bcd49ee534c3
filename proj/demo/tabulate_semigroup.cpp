// Tabulates the sticky transition kernel P_t(x, dy): density values and the
// boundary atom, as CSV (x, y, density, atom).
//
//   ./tabulate_semigroup [theta] [t] > density.csv

#include <cstdlib>
#include <iostream>

#include "stickyflow/stickyflow.hpp"

int main(int argc, char** argv) {
  using namespace stickyflow;
  const double theta = argc > 1 ? std::atof(argv[1]) : 1.0;
  const double t = argc > 2 ? std::atof(argv[2]) : 1.0;
  const auto kernel = make_kernel(theta, t);

  std::cout << "x,y,density,atom\n";
  for (double x : {0.0, 0.5, 1.0, 2.0}) {
    for (int i = 0; i <= 150; ++i) {
      const double y = 6.0 * i / 150.0;
      std::cout << csv_num(x) << "," << csv_num(y) << ","
                << csv_num(kernel.density_at(x, y)) << "," << csv_num(kernel.atom_at(x))
                << "\n";
    }
  }
  return 0;
}
