#include <doctest.h>

#include <cmath>
#include <vector>

#include "stickyflow/brownian.hpp"
#include "stickyflow/rng.hpp"
#include "stickyflow/special_functions.hpp"
#include "stickyflow/stats.hpp"

using namespace stickyflow;

TEST_CASE("mc_mean hand examples") {
  SUBCASE("constant samples give a zero-width interval") {
    std::vector<double> v(100, 3.25);
    const auto e = mc_mean(v);
    CHECK(e.mean == 3.25);
    CHECK(e.std_error == 0.0);
    CHECK(e.ci_low == e.ci_high);
  }
  SUBCASE("two samples {0,2}: mean 1, std_error 1") {
    const auto e = mc_mean(std::vector<double>{0.0, 2.0});
    CHECK(e.mean == 1.0);
    CHECK(e.std_error == 1.0);
    CHECK(e.ci_low == 1.0 - 4.0);
    CHECK(e.ci_high == 1.0 + 4.0);
  }
  SUBCASE("1e5 standard normals: mean within 4 sigma of 0") {
    CounterRng rng(31);
    std::vector<double> v(100000);
    for (auto& x : v) x = rng.next_gaussian();
    const auto e = mc_mean(v);
    CHECK(std::abs(e.mean) < 4.0 * e.std_error);
    CHECK(e.ci_low <= e.mean);
    CHECK(e.mean <= e.ci_high);
  }
}

TEST_CASE("pairwise_sum matches exact integer arithmetic") {
  std::vector<double> v;
  double exact = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    v.push_back(i);
    exact += i;
  }
  CHECK(pairwise_sum(v) == exact);
}

TEST_CASE("two-sample KS basics") {
  SUBCASE("identical samples give D = 0") {
    std::vector<double> a{0.1, 0.5, 0.7, 1.2};
    const auto rep = ks_two_sample(a, a);
    CHECK(rep.statistic == 0.0);
    CHECK(rep.p_value == 1.0);
    CHECK(rep.pass);
  }
  SUBCASE("disjoint supports give D = 1") {
    std::vector<double> a{0.0, 0.1, 0.2, 0.3};
    std::vector<double> b{5.0, 5.1, 5.2, 5.3};
    const auto rep = ks_two_sample(a, b);
    CHECK(rep.statistic == 1.0);
  }
}

TEST_CASE("KS null calibration: rejection rate near alpha over 200 repetitions") {
  int rejections = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    CounterRng rng(6000 + r);
    std::vector<double> a(10000), b(10000);
    for (auto& x : a) x = rng.next_gaussian();
    for (auto& x : b) x = rng.next_gaussian();
    if (!ks_two_sample(std::move(a), std::move(b), 0.01).pass) ++rejections;
  }
  // binomial 4 sigma around alpha = 0.01
  const double bound = 4.0 * std::sqrt(reps * 0.01 * 0.99);
  CHECK(std::abs(rejections - reps * 0.01) <= bound);
}

TEST_CASE("one-sample KS against the exact normal CDF") {
  CounterRng rng(17);
  std::vector<double> v(10000);
  for (auto& x : v) x = rng.next_gaussian();
  const auto rep = ks_one_sample(v, [](double x) { return normal_cdf(x); }, 0.01);
  CHECK(rep.pass);
  // shifted sample must fail decisively
  for (auto& x : v) x += 0.2;
  const auto bad = ks_one_sample(v, [](double x) { return normal_cdf(x); }, 0.01);
  CHECK(!bad.pass);
}

TEST_CASE("joint law test") {
  JointLawConfig sim;
  sim.n_time_steps = 256;
  sim.seed = 77;
  SUBCASE("f = g = 1 gives zero discrepancy at quadrature resolution") {
    const PathFunctional g{{}, [](std::span<const double>) { return 1.0; }};
    const auto d = joint_law_test(constant_one(), g, 1.0, 1.0, 500, sim);
    CHECK(std::abs(d.mean) <= 1e-14);
    CHECK(d.std_error <= 1e-14);
  }
  SUBCASE("g = 1, general f: both sides estimate P_t f(0)") {
    const PathFunctional g{{}, [](std::span<const double>) { return 1.0; }};
    const auto f = da_battery(1.0)[2];
    const auto d = joint_law_test(f, g, 1.0, 1.0, 4000, sim);
    CHECK(std::abs(d.mean) <= 4.0 * d.std_error);
  }
  SUBCASE("driver-coordinate functional within the 4 sigma gate") {
    const PathFunctional g{
        {0.5}, [](std::span<const double> w) { return std::sin(w[0]); }};
    const auto f = da_battery(1.0)[1];
    const auto d = joint_law_test(f, g, 1.0, 1.0, 4000, sim);
    CHECK(std::abs(d.mean) <= 4.0 * d.std_error);
  }
  SUBCASE("coordinates beyond the horizon rejected") {
    const PathFunctional g{{1.5}, [](std::span<const double>) { return 1.0; }};
    CHECK_THROWS_AS(joint_law_test(da_battery(1.0)[0], g, 1.0, 1.0, 10, sim),
                    std::invalid_argument);
  }
}

TEST_CASE("epsilon local time estimator") {
  SUBCASE("path pinned at zero diverges like t/(2 eps)") {
    ReflectedPath r;
    r.grid = TimeGrid(0.0, 0.01, 100);
    r.r.assign(101, 0.0);
    r.l.assign(101, 0.0);
    CHECK(epsilon_local_time(r, 0.05) == doctest::Approx(1.0 / 0.1).epsilon(1e-12));
  }
  SUBCASE("path never below eps gives 0") {
    ReflectedPath r;
    r.grid = TimeGrid(0.0, 0.01, 100);
    r.r.assign(101, 2.0);
    r.l.assign(101, 0.0);
    CHECK(epsilon_local_time(r, 0.05) == 0.0);
  }
  SUBCASE("ensemble mean at eps = 4 sqrt(dt) tracks the Levy local time within 15%") {
    const TimeGrid grid(0.0, std::ldexp(1.0, -14), 1 << 14);  // t = 1
    const int n = 400;
    std::vector<double> est(n), levy(n);
    for (int i = 0; i < n; ++i) {
      const auto r = reflect(sample_brownian(grid, 22000 + i));
      est[i] = epsilon_local_time(r, 4.0 * std::sqrt(grid.dt));
      levy[i] = r.l.back();
    }
    const double m_est = mc_mean(est).mean;
    const double m_levy = mc_mean(levy).mean;
    CHECK(std::abs(m_est - m_levy) <= 0.15 * m_levy);
  }
}
