#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "stickyflow/brownian.hpp"
#include "stickyflow/g_transform.hpp"
#include "stickyflow/parallel.hpp"
#include "stickyflow/propagator.hpp"
#include "stickyflow/semigroup.hpp"
#include "stickyflow/tabulated.hpp"
#include "stickyflow/test_function.hpp"

namespace stickyflow {

// (P+_t f)'(x): derivative kernels of the reflected semigroup.
template <typename F>
double reflected_apply_prime_fn(double t, const F& f, double x, double tol = 1e-10) {
  if (!(t > 0.0)) throw std::invalid_argument("reflected_apply_prime: t must be > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("reflected_apply_prime: x must be >= 0");
  return detail::integrate_windows(
      [&](double y) { return reflected_density_dx(t, x, y) * f(y); }, t, x, tol);
}

struct ChaosResult {
  double j0 = 0.0;           // P_t f(0), path independent
  std::vector<double> j;     // J^n, n = 1..n_max
  double reference = 0.0;    // G_f(W^+_t) on the same path

  double truncation(std::size_t n_max) const {
    double s = j0;
    for (std::size_t n = 0; n < std::min(n_max, j.size()); ++n) s += j[n];
    return s;
  }
};

// Per-(propagators, f) machinery for the truncated expansion
//   P_t f(0) + sum_n  sum_{i_1<...<i_n} c(i_1,..,i_n) dW_{i_1}...dW_{i_n},
//   c(i_1,..,i_n) = e_0' P_{i_1 dlt} [DP]_{i_2-i_1} ... [DP]_{i_n-i_{n-1}} phi(i_n),
// with phi(i) = D P_{t - i dlt} f evaluated analytically (apply_prime) at the
// grid nodes. The simplex sums reuse two path-independent caches so each path
// costs O(K^2 m):
//   rcache[i1][g] = row0(i1) * DP_g      (rows, contiguous in g per i1)
//   vcache[g][i3] = DP_g * phi(i3)       (vectors, contiguous in i3 per g)
class ChaosEngine {
 public:
  ChaosEngine(const PropagatorSet& props, const TestFunction& f, std::size_t n_max,
              unsigned threads = 0)
      : props_(props), n_max_(n_max) {
    if (n_max_ > 3)
      throw std::invalid_argument("ChaosEngine: n_max must be <= 3 (cost guard)");
    const std::size_t md = props.dim();
    const std::size_t big_k = props.n_steps;
    const double t = props.delta * static_cast<double>(big_k);

    // innermost vectors phi(i), i = 0..K-1, gap t - i*delta
    TabulatedFunction gf_table;
    if (props.reflected) {
      const double range = props.grid.x_max + 14.0 * std::sqrt(t) + 1.0;
      const double theta_f = f.theta;
      gf_table = TabulatedFunction::build(
          [&](double y) { return g_transform_fn(f.f, theta_f, y); }, 0.0, range, 8192);
    }
    phi_.assign(big_k, std::vector<double>(md));
    parallel_for(big_k, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double gap = props.delta * static_cast<double>(big_k - i);
        for (std::size_t jn = 0; jn < props.grid.m; ++jn) {
          const double x = props.grid.node(jn);
          phi_[i][1 + jn] =
              props.reflected
                  ? reflected_apply_prime_fn(gap, gf_table, x)
                  : apply_prime_fn(
                        TransitionKernel{SemigroupParams(props.theta, gap)}, f.f, x);
        }
        // atom slot: D zeroes it, D+ keeps the boundary derivative
        phi_[i][0] = props.reflected ? phi_[i][1] : 0.0;
      }
    });

    // row0(k): evaluation at the boundary of P_{k delta} applied to a vector;
    // k = 0 degenerates to reading the atom slot
    row0_.assign(big_k, std::vector<double>(md, 0.0));
    row0_[0][0] = 1.0;
    for (std::size_t k = 1; k < big_k; ++k) {
      const auto& mat = props.p_k(k);
      std::copy(mat.begin(), mat.begin() + md, row0_[k].begin());
    }

    c1_.assign(big_k, 0.0);
    for (std::size_t i = 0; i < big_k; ++i) {
      double s = 0.0;
      for (std::size_t jn = 0; jn < md; ++jn) s += row0_[i][jn] * phi_[i][jn];
      c1_[i] = s;
    }

    if (n_max_ >= 2) build_rcache(threads);
    if (n_max_ >= 3) build_vcache(threads);
  }

  // J^1..J^n for one path's increments (dw[i] = W_{(i+1)dlt} - W_{i dlt}).
  std::vector<double> terms(const std::vector<double>& dw) const {
    const std::size_t big_k = props_.n_steps;
    if (dw.size() != big_k)
      throw std::invalid_argument("ChaosEngine: path grid does not match propagators");
    const std::size_t m = props_.dim();
    std::vector<double> out(n_max_, 0.0);

    for (std::size_t i = 0; i < big_k; ++i) out[0] += dw[i] * c1_[i];
    if (n_max_ < 2) return out;

    // r2[i2] = sum_{i1 < i2} dW_{i1} rcache(i1, i2 - i1)
    std::vector<double> r2(big_k * m, 0.0);
    for (std::size_t i1 = 0; i1 + 1 < big_k; ++i1) {
      const double w1 = dw[i1];
      if (w1 == 0.0) continue;
      const double* rc = rcache_.data() + rc_offset_[i1];
      for (std::size_t i2 = i1 + 1; i2 < big_k; ++i2, rc += m) {
        double* dst = r2.data() + i2 * m;
        for (std::size_t jn = 0; jn < m; ++jn) dst[jn] += w1 * rc[jn];
      }
    }
    for (std::size_t i2 = 1; i2 < big_k; ++i2) {
      const double* r = r2.data() + i2 * m;
      const double* ph = phi_[i2].data();
      double s = 0.0;
      for (std::size_t jn = 0; jn < m; ++jn) s += r[jn] * ph[jn];
      out[1] += dw[i2] * s;
    }
    if (n_max_ < 3) return out;

    for (std::size_t g = 1; g + 2 <= big_k; ++g) {
      const double* vc = vcache_.data() + vc_offset_[g];
      for (std::size_t i3 = g + 1; i3 < big_k; ++i3, vc += m) {
        const std::size_t i2 = i3 - g;
        const double w = dw[i2] * dw[i3];
        if (w == 0.0) continue;
        const double* r = r2.data() + i2 * m;
        double s = 0.0;
        for (std::size_t jn = 0; jn < m; ++jn) s += r[jn] * vc[jn];
        out[2] += w * s;
      }
    }
    return out;
  }

  // c(s_1,...,s_n) at left-point grid times (used by the sampled-times API)
  double coefficient(const std::vector<std::size_t>& idx) const {
    if (idx.empty()) throw std::invalid_argument("coefficient: empty index tuple");
    std::vector<double> v = phi_[idx.back()];
    std::vector<double> tmp;
    for (std::size_t r = idx.size() - 1; r-- > 0;) {
      const std::size_t gap = idx[r + 1] - idx[r];
      matvec(props_.dp_k(gap), v, tmp);
      v.swap(tmp);
    }
    double s = 0.0;
    for (std::size_t jn = 0; jn < props_.dim(); ++jn) s += row0_[idx[0]][jn] * v[jn];
    return s;
  }

  const PropagatorSet& props() const { return props_; }
  std::size_t n_max() const { return n_max_; }

 private:
  void build_rcache(unsigned threads) {
    const std::size_t big_k = props_.n_steps;
    const std::size_t m = props_.dim();
    rc_offset_.assign(big_k, 0);
    std::size_t total = 0;
    for (std::size_t i1 = 0; i1 + 1 < big_k; ++i1) {
      rc_offset_[i1] = total;
      total += (big_k - 1 - i1) * m;
    }
    rcache_.assign(total, 0.0);
    parallel_for(big_k - 1, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i1 = lo; i1 < hi; ++i1) {
        double* dst = rcache_.data() + rc_offset_[i1];
        for (std::size_t g = 1; i1 + g < big_k; ++g, dst += m) {
          const auto& mat = props_.dp_k(g);
          const double* row = row0_[i1].data();
          if (i1 == 0) {
            // identity row: picks row 0 of DP_g
            std::copy(mat.begin(), mat.begin() + m, dst);
            continue;
          }
          for (std::size_t jn = 0; jn < m; ++jn) {
            double s = 0.0;
            for (std::size_t jj = 0; jj < m; ++jj) s += row[jj] * mat[jj * m + jn];
            dst[jn] = s;
          }
        }
      }
    });
  }

  void build_vcache(unsigned threads) {
    const std::size_t big_k = props_.n_steps;
    const std::size_t m = props_.dim();
    vc_offset_.assign(big_k, 0);
    std::size_t total = 0;
    for (std::size_t g = 1; g + 2 <= big_k; ++g) {
      vc_offset_[g] = total;
      total += (big_k - 1 - g) * m;
    }
    vcache_.assign(total, 0.0);
    parallel_for(big_k - 1, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t g = std::max<std::size_t>(lo, 1); g < hi; ++g) {
        if (g + 2 > big_k) continue;
        double* dst = vcache_.data() + vc_offset_[g];
        const auto& mat = props_.dp_k(g);
        std::vector<double> tmp;
        for (std::size_t i3 = g + 1; i3 < big_k; ++i3, dst += m) {
          matvec(mat, phi_[i3], tmp);
          std::copy(tmp.begin(), tmp.end(), dst);
        }
      }
    });
  }

  const PropagatorSet& props_;
  std::size_t n_max_;
  std::vector<std::vector<double>> phi_;
  std::vector<std::vector<double>> row0_;
  std::vector<double> c1_;
  std::vector<double> rcache_;
  std::vector<std::size_t> rc_offset_;
  std::vector<double> vcache_;
  std::vector<std::size_t> vc_offset_;
};

// Coefficient at explicit simplex times 0 < s_1 < ... < s_n < t, which must
// sit on the propagator clock (multiples of delta).
inline double chaos_coefficient(const ChaosEngine& engine,
                                const std::vector<double>& times) {
  const double delta = engine.props().delta;
  std::vector<std::size_t> idx;
  double prev = 0.0;
  for (double s : times) {
    if (s <= prev)
      throw std::invalid_argument("chaos_coefficient: times must be strictly increasing");
    const double r = s / delta;
    const auto i = static_cast<std::size_t>(std::llround(r));
    if (std::abs(r - static_cast<double>(i)) > 1e-9)
      throw std::invalid_argument("chaos_coefficient: times must be multiples of delta");
    if (i >= engine.props().n_steps)
      throw std::invalid_argument("chaos_coefficient: time beyond the horizon");
    idx.push_back(i);
    prev = s;
  }
  return engine.coefficient(idx);
}

// E[f(X_t)|F^W] reference: G_f(W^+_t) from the same path.
inline double reference_value(const BrownianPath& path, const TestFunction& f,
                              double theta) {
  double m = path.values[0];
  for (double v : path.values) m = std::min(m, v);
  return g_transform_fn(f.f, theta, path.values.back() - m);
}

// Per-order comparison of the expansion with its reflected-semigroup form:
// |J^0 - J^{0+}| and |J^n - J^{n+}| on the same path. The two expand the same
// random variable, so the differences carry only grid and quadrature budgets.
struct PplusComparison {
  double order0 = 0.0;
  std::vector<double> orders;
};

inline PplusComparison pplus_expansion_check(const BrownianPath& path,
                                             const ChaosEngine& engine,
                                             const ChaosEngine& engine_plus, double j0,
                                             double j0_plus, std::size_t n_max) {
  if (n_max > std::min(engine.n_max(), engine_plus.n_max()))
    throw std::invalid_argument("pplus_expansion_check: engines built with fewer orders");
  std::vector<double> dw(path.grid.n_steps);
  for (std::size_t i = 0; i < dw.size(); ++i)
    dw[i] = path.values[i + 1] - path.values[i];
  const auto a = engine.terms(dw);
  const auto b = engine_plus.terms(dw);
  PplusComparison cmp;
  cmp.order0 = std::abs(j0 - j0_plus);
  for (std::size_t n = 0; n < n_max; ++n)
    cmp.orders.push_back(std::abs(a[n] - b[n]));
  return cmp;
}

// Full per-path expansion against a matching path grid.
inline ChaosResult iterated_ito_sum(const BrownianPath& path, const ChaosEngine& engine,
                                    const TestFunction& f, double j0,
                                    std::size_t n_max) {
  const auto& props = engine.props();
  if (path.grid.n_steps != props.n_steps ||
      std::abs(path.grid.dt - props.delta) > 1e-12 * props.delta)
    throw std::invalid_argument("iterated_ito_sum: path grid must match the propagators");
  if (n_max > 3)
    throw std::invalid_argument("iterated_ito_sum: n_max must be <= 3 (cost guard)");
  if (n_max > engine.n_max())
    throw std::invalid_argument("iterated_ito_sum: engine built with fewer orders");
  std::vector<double> dw(props.n_steps);
  for (std::size_t i = 0; i < props.n_steps; ++i)
    dw[i] = path.values[i + 1] - path.values[i];
  ChaosResult res;
  res.j0 = j0;
  res.j = engine.terms(dw);
  res.j.resize(n_max, 0.0);
  const double theta = props.reflected ? f.theta : props.theta;
  res.reference = reference_value(path, f, theta);
  return res;
}

}  // namespace stickyflow
