#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stickyflow/g_transform.hpp"
#include "stickyflow/parallel.hpp"
#include "stickyflow/sticky.hpp"
#include "stickyflow/test_function.hpp"

namespace stickyflow {

// Pairwise (cascade) summation. Fixed reduction order regardless of thread
// count, so ensemble statistics are bitwise reproducible.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double z = 4.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline McEstimate mc_mean(std::span<const double> samples, double z = 4.0) {
  if (samples.empty()) throw std::invalid_argument("mc_mean: empty sample");
  McEstimate e;
  e.n = samples.size();
  e.z = z;
  const double n = static_cast<double>(e.n);
  e.mean = pairwise_sum(samples) / n;
  if (e.n > 1) {
    std::vector<double> sq(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double d = samples[i] - e.mean;
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / (n - 1.0);
    e.std_error = std::sqrt(var / n);
  }
  e.ci_low = e.mean - z * e.std_error;
  e.ci_high = e.mean + z * e.std_error;
  return e;
}

inline McEstimate mc_mean(const std::vector<double>& samples, double z = 4.0) {
  return mc_mean(std::span<const double>(samples), z);
}

struct KsReport {
  double statistic = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;  // 0 for one-sample reports
  double p_value = 1.0;
  double alpha = 0.01;
  bool pass = true;
};

namespace detail {

// Asymptotic Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2k^2 lambda^2),
// truncated at 100 terms (tail < 1e-10 for any lambda where it matters).
inline double ks_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_p_value(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  return ks_q(d * (s + 0.12 + 0.11 / s));
}

}  // namespace detail

inline KsReport ks_two_sample(std::vector<double> a, std::vector<double> b,
                              double alpha = 0.01) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsReport rep;
  rep.statistic = d;
  rep.n1 = a.size();
  rep.n2 = b.size();
  rep.alpha = alpha;
  rep.p_value = detail::ks_p_value(d, na * nb / (na + nb));
  rep.pass = rep.p_value > alpha;
  return rep;
}

inline KsReport ks_one_sample(std::vector<double> samples,
                              const std::function<double(double)>& cdf,
                              double alpha = 0.01) {
  if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
  }
  KsReport rep;
  rep.statistic = d;
  rep.n1 = samples.size();
  rep.n2 = 0;
  rep.alpha = alpha;
  rep.p_value = detail::ks_p_value(d, n);
  rep.pass = rep.p_value > alpha;
  return rep;
}

// A bounded functional of the driver reading finitely many path coordinates.
struct PathFunctional {
  std::vector<double> times;
  std::function<double(std::span<const double>)> fn;

  double eval(const BrownianPath& w) const {
    std::vector<double> coords(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double rel = times[k] - w.grid.t_start;
      if (rel < 0.0 || rel > w.grid.n_steps * w.grid.dt * (1.0 + 1e-12))
        throw std::invalid_argument("PathFunctional: coordinate beyond the horizon");
      const auto idx = static_cast<std::size_t>(std::llround(rel / w.grid.dt));
      coords[k] = w.values[std::min(idx, w.grid.n_steps)];
    }
    return fn(coords);
  }
};

struct JointLawConfig {
  std::size_t n_time_steps = 2000;
  std::size_t source_ratio = 8;
  std::uint64_t seed = 1;
  double zero_detect_c = 0.01;
  unsigned threads = 0;
};

// Joint-law discrepancy for one (f, g) pair: the mean over simulated paths of
// f(X_t) g(W) (W the reconstructed driver) minus the mean over independent
// plain paths of G_f(W+_t) g(W), with the pooled standard error. Under the
// conditional-law identity the discrepancy is 0.
inline McEstimate joint_law_test(const TestFunction& f, const PathFunctional& g,
                                 double theta, double t, std::size_t n_paths,
                                 const JointLawConfig& sim) {
  if (!(theta > 0.0)) throw std::invalid_argument("joint_law_test: theta must be > 0");
  for (double s : g.times)
    if (s > t * (1.0 + 1e-12))
      throw std::invalid_argument("joint_law_test: g coordinate beyond the horizon");
  const StickyParams params(theta);
  const TimeGrid out_grid(0.0, t / static_cast<double>(sim.n_time_steps),
                          sim.n_time_steps);
  const TimeGrid src_grid(0.0,
                          t / static_cast<double>(sim.n_time_steps * sim.source_ratio),
                          sim.n_time_steps * sim.source_ratio);
  std::vector<double> a(n_paths), b(n_paths);
  parallel_for(n_paths, sim.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto src = sample_brownian(src_grid, CounterRng::mix(sim.seed + 0x51) + i);
      const auto sticky =
          simulate_time_change(reflect(src), params, out_grid, sim.zero_detect_c);
      const auto driver = reconstruct_driver(sticky, params,
                                             CounterRng::mix(sim.seed + 0x52) + i);
      a[i] = f.f(sticky.x.back()) * g.eval(driver);
      const auto plain =
          sample_brownian(out_grid, CounterRng::mix(sim.seed + 0x53) + i);
      double run_min = 0.0;
      for (double v : plain.values) run_min = std::min(run_min, v);
      b[i] = g_transform_fn(f.f, theta, plain.values.back() - run_min) * g.eval(plain);
    }
  });
  const auto ea = mc_mean(a);
  const auto eb = mc_mean(b);
  McEstimate delta;
  delta.n = n_paths;
  delta.z = 4.0;
  delta.mean = ea.mean - eb.mean;
  delta.std_error =
      std::sqrt(ea.std_error * ea.std_error + eb.std_error * eb.std_error);
  delta.ci_low = delta.mean - delta.z * delta.std_error;
  delta.ci_high = delta.mean + delta.z * delta.std_error;
  return delta;
}

// epsilon-occupation estimator of local time at 0 for a reflected path:
// (1/2eps) * dt * #{i : 0 <= R[i] <= eps, t_i < horizon}. Cross-check against
// the running-minimum local time; diverges on the degenerate R == 0 path.
template <typename ReflectedPathT>
double epsilon_local_time(const ReflectedPathT& reflected, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon_local_time: eps must be > 0");
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < reflected.r.size(); ++i) {
    if (reflected.r[i] <= eps) ++count;
  }
  return reflected.grid.dt * static_cast<double>(count) / (2.0 * eps);
}

}  // namespace stickyflow
