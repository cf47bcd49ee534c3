#include <doctest.h>

#include <cmath>
#include <vector>

#include "stickyflow/chaos.hpp"
#include "stickyflow/stats.hpp"

using namespace stickyflow;

namespace {

// small but honest scale for unit tests; acceptance runs the full 200x200
constexpr std::size_t kSteps = 40;
constexpr std::size_t kNodes = 120;

const PropagatorSet& sticky_props() {
  static const PropagatorSet props =
      build_propagators(1.0, 1.0, kSteps, SpaceGrid(8.0, kNodes));
  return props;
}

const PropagatorSet& reflected_props() {
  static const PropagatorSet props =
      build_reflected_propagators(1.0, kSteps, SpaceGrid(8.0, kNodes));
  return props;
}

}  // namespace

TEST_CASE("propagator conservativity on every row") {
  for (std::size_t k : {std::size_t(1), std::size_t(7), kSteps}) {
    CHECK(sticky_props().conservativity_error(k) <= 1e-6);
    CHECK(reflected_props().conservativity_error(k) <= 1e-6);
  }
}

TEST_CASE("grid Chapman-Kolmogorov: P_{2 delta} vs P_delta P_delta") {
  // sup over the interior; the last ~1.5 units before x_max sit in the
  // truncation-closure boundary layer, where one 2delta step and two delta
  // steps extrapolate the [x_max, inf) tail differently. Mass diffusing from
  // the boundary evaluation point never reaches that layer.
  const auto& props = sticky_props();
  const double x_hi = props.grid.x_max - 1.5;
  for (const auto& f : da_battery(1.0)) {
    const auto fv = props.sample(f.f);
    std::vector<double> once, twice;
    matvec(props.p_k(1), fv, once);
    matvec(props.p_k(1), once, twice);
    std::vector<double> direct;
    matvec(props.p_k(2), fv, direct);
    double err = 0.0;
    for (std::size_t j = 0; j < props.dim(); ++j) {
      const double x = j == 0 ? 0.0 : props.grid.node(j - 1);
      if (x <= x_hi) err = std::max(err, std::abs(twice[j] - direct[j]));
    }
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("propagator matches the quadrature semigroup on the battery") {
  const auto& props = sticky_props();
  const auto f = da_battery(1.0)[2];
  const auto fv = props.sample(f.f);
  for (std::size_t k : {std::size_t(1), std::size_t(20), kSteps}) {
    std::vector<double> via_grid;
    matvec(props.p_k(k), fv, via_grid);
    const auto kern = make_kernel(1.0, props.delta * k);
    // atom slot tracks the value at 0
    CHECK(std::abs(via_grid[0] - apply(kern, f, 0.0)) <= 1e-5);
    for (std::size_t j : {std::size_t(0), std::size_t(10), kNodes / 2}) {
      const double direct = apply(kern, f, props.grid.node(j));
      CHECK(std::abs(via_grid[1 + j] - direct) <= 1e-5);
    }
  }
}

TEST_CASE("cost guards") {
  CHECK_THROWS_AS(build_propagators(1.0, 1.0, 600, SpaceGrid(8.0, 64)),
                  std::invalid_argument);
  CHECK_THROWS_AS(SpaceGrid(8.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(ChaosEngine(sticky_props(), da_battery(1.0)[0], 4),
                  std::invalid_argument);
}

TEST_CASE("chaos coefficients") {
  const auto f = da_battery(1.0)[2];
  const ChaosEngine engine(sticky_props(), f, 2);
  SUBCASE("constant functions are killed by D") {
    const ChaosEngine ce(sticky_props(), constant_one(), 1);
    CHECK(std::abs(chaos_coefficient(ce, {0.5})) <= 1e-12);
  }
  SUBCASE("unsorted or off-clock times rejected") {
    CHECK_THROWS_AS(chaos_coefficient(engine, {0.5, 0.25}), std::invalid_argument);
    CHECK_THROWS_AS(chaos_coefficient(engine, {0.5 + 1e-4}), std::invalid_argument);
  }
  SUBCASE("n=1 coefficient against a refined evaluation") {
    const double coarse = chaos_coefficient(engine, {0.5});
    static const PropagatorSet fine_props =
        build_propagators(1.0, 1.0, 2 * kSteps, SpaceGrid(8.0, 2 * kNodes));
    const ChaosEngine fine(fine_props, f, 1);
    const double refined = chaos_coefficient(fine, {0.5});
    CHECK(std::abs(coarse - refined) <= 1e-4);
  }
  SUBCASE("order-1 coefficient equals P_s applied to D P_{t-s} f at 0") {
    // independent route: quadrature composition of the two factors
    const double s = 0.5, gap = 0.5;
    const auto inner = [&](double x) {
      return x > 0.0
                 ? apply_prime_fn(TransitionKernel{SemigroupParams(1.0, gap)}, f.f, x)
                 : 0.0;
    };
    const double direct = apply_fn(TransitionKernel{SemigroupParams(1.0, s)}, inner, 0.0);
    CHECK(std::abs(chaos_coefficient(engine, {s}) - direct) <= 1e-5);
  }
}

TEST_CASE("iterated Ito sums") {
  const auto f = da_battery(1.0)[2];
  const auto& props = sticky_props();
  const ChaosEngine engine(props, f, 3);
  const double j0 = apply(make_kernel(1.0, 1.0), f, 0.0);
  const TimeGrid grid(0.0, props.delta, props.n_steps);

  SUBCASE("n_max = 0 truncation is path independent") {
    const auto p1 = sample_brownian(grid, 1);
    const auto p2 = sample_brownian(grid, 2);
    const auto r1 = iterated_ito_sum(p1, engine, f, j0, 0);
    const auto r2 = iterated_ito_sum(p2, engine, f, j0, 0);
    CHECK(r1.truncation(0) == r2.truncation(0));
    CHECK(r1.truncation(0) == j0);
  }
  SUBCASE("grid mismatch rejected") {
    const auto p = sample_brownian(TimeGrid(0.0, 0.5, 2), 1);
    CHECK_THROWS_AS(iterated_ito_sum(p, engine, f, j0, 1), std::invalid_argument);
  }
  SUBCASE("J1 is mean zero and the variance of the residual improves") {
    const int n = 1000;
    std::vector<double> j1(n);
    std::vector<std::vector<double>> err(4, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
      const auto path = sample_brownian(grid, 400000 + i);
      const auto res = iterated_ito_sum(path, engine, f, j0, 3);
      j1[i] = res.j[0];
      for (std::size_t nn = 0; nn <= 3; ++nn) {
        const double d = res.reference - res.truncation(nn);
        err[nn][i] = d * d;
      }
    }
    const auto est = mc_mean(j1);
    CHECK(std::abs(est.mean) <= 4.0 * est.std_error);
    // strict MSE drop from order 0 to 1, monotone within bands afterwards
    std::vector<double> d01(n), d12(n), d23(n);
    for (int i = 0; i < n; ++i) {
      d01[i] = err[0][i] - err[1][i];
      d12[i] = err[1][i] - err[2][i];
      d23[i] = err[2][i] - err[3][i];
    }
    const auto e01 = mc_mean(d01);
    const auto e12 = mc_mean(d12);
    const auto e23 = mc_mean(d23);
    CHECK(e01.mean > 4.0 * e01.std_error);
    CHECK(e12.mean >= -4.0 * e12.std_error);
    CHECK(e23.mean >= -4.0 * e23.std_error);
  }
}

TEST_CASE("expansion via the reflected semigroup matches termwise") {
  const auto f = da_battery(1.0)[1];
  const ChaosEngine sticky_engine(sticky_props(), f, 2);
  const ChaosEngine reflected_engine(reflected_props(), f, 2);
  const double j0 = apply(make_kernel(1.0, 1.0), f, 0.0);
  const double j0_plus = reflected_apply_fn(
      1.0, 1.0, [&](double y) { return g_transform_fn(f.f, 1.0, y); }, 0.0);
  CHECK(std::abs(j0 - j0_plus) <= 1e-6);

  const TimeGrid grid(0.0, sticky_props().delta, kSteps);
  double max_d1 = 0.0, max_d2 = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto path = sample_brownian(grid, 880000 + i);
    const auto cmp =
        pplus_expansion_check(path, sticky_engine, reflected_engine, j0, j0_plus, 2);
    CHECK(cmp.order0 <= 1e-6);
    max_d1 = std::max(max_d1, cmp.orders[0]);
    max_d2 = std::max(max_d2, cmp.orders[1]);
  }
  CHECK(max_d1 <= 1e-4);
  CHECK(max_d2 <= 2e-3);  // order-2 carries the coarser grid budget twice
}

TEST_CASE("f identically 1: all stochastic orders vanish on both sides") {
  const auto one = constant_one();
  const ChaosEngine se(sticky_props(), one, 2);
  const ChaosEngine re(reflected_props(), one, 2);
  const TimeGrid grid(0.0, sticky_props().delta, kSteps);
  const auto path = sample_brownian(grid, 9);
  const auto a = iterated_ito_sum(path, se, one, 1.0, 2);
  const auto b = iterated_ito_sum(path, re, one, 1.0, 2);
  for (double v : {a.j[0], a.j[1], b.j[0], b.j[1]}) CHECK(std::abs(v) <= 1e-10);
}
