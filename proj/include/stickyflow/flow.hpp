#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "stickyflow/brownian.hpp"
#include "stickyflow/g_transform.hpp"
#include "stickyflow/rng.hpp"
#include "stickyflow/test_function.hpp"

namespace stickyflow {

inline std::optional<std::size_t> tau(const BrownianPath& path, std::size_t s_index,
                                      double x) {
  return hitting_index(path, s_index, x);
}

namespace detail {

inline double segment_min(const BrownianPath& path, std::size_t s, std::size_t t) {
  double m = path.values[s];
  for (std::size_t u = s + 1; u <= t; ++u) m = std::min(m, path.values[u]);
  return m;
}

}  // namespace detail

// Flow of maps phi_{s,t}(x): x + W_t - W_s before the hitting time of 0, the
// reflected value W_t - min_{[s,t]} W from the hitting time on. The hit is
// detected as min_{[s,t]} W <= W_s - x, so at t == tau the value is exactly 0
// (never the negative grid overshoot), phi >= 0 always, and on lattice paths
// the composition phi_{s,u} = phi_{t,u} o phi_{s,t} holds exactly.
inline double phi(const BrownianPath& path, std::size_t s_index, std::size_t t_index,
                  double x) {
  if (s_index > t_index) throw std::invalid_argument("phi: s_index must be <= t_index");
  if (t_index >= path.values.size()) throw std::out_of_range("phi: index beyond path");
  if (!(x >= 0.0)) throw std::invalid_argument("phi: x must be >= 0");
  const double m = detail::segment_min(path, s_index, t_index);
  const double level = path.values[s_index] - x;
  if (m > level) return x + (path.values[t_index] - path.values[s_index]);
  return path.values[t_index] - m;
}

// The random measure K_{s,t}(x, .): a Dirac mass delta_z before the hit, the
// law of (z - T)^+ (T ~ Exp(2 theta)) with z = W^+_{s,t} after it. sticky(0)
// is canonicalized to dirac(0) -- the measures coincide.
struct KernelMeasure {
  enum class Kind { dirac, sticky };
  Kind kind = Kind::dirac;
  double z = 0.0;
  double theta = 1.0;

  static KernelMeasure dirac(double z, double theta) {
    if (!(z >= 0.0)) throw std::invalid_argument("KernelMeasure: z must be >= 0");
    return {Kind::dirac, z, theta};
  }
  static KernelMeasure sticky(double z, double theta) {
    if (!(z >= 0.0)) throw std::invalid_argument("KernelMeasure: z must be >= 0");
    if (z == 0.0) return {Kind::dirac, 0.0, theta};
    return {Kind::sticky, z, theta};
  }
  double atom_mass() const {
    return kind == Kind::dirac ? (z == 0.0 ? 1.0 : 0.0) : std::exp(-2.0 * theta * z);
  }
};

inline KernelMeasure kernel_measure(const BrownianPath& path, std::size_t s_index,
                                    std::size_t t_index, double x, double theta) {
  if (s_index > t_index)
    throw std::invalid_argument("kernel_measure: s_index must be <= t_index");
  if (t_index >= path.values.size())
    throw std::out_of_range("kernel_measure: index beyond path");
  if (!(x >= 0.0)) throw std::invalid_argument("kernel_measure: x must be >= 0");
  const double m = detail::segment_min(path, s_index, t_index);
  const double level = path.values[s_index] - x;
  if (m > level)
    return KernelMeasure::dirac(x + (path.values[t_index] - path.values[s_index]), theta);
  return KernelMeasure::sticky(path.values[t_index] - m, theta);
}

template <typename F>
double kernel_apply_fn(const KernelMeasure& k, const F& f) {
  if (k.kind == KernelMeasure::Kind::dirac) return f(k.z);
  return g_transform_fn(f, k.theta, k.z);
}

inline double kernel_apply(const KernelMeasure& k, const TestFunction& f) {
  return kernel_apply_fn(k, f.f);
}

inline double kernel_sample(const KernelMeasure& k, CounterRng& rng) {
  if (k.kind == KernelMeasure::Kind::dirac) return k.z;
  const double t = rng.next_exponential(2.0 * k.theta);
  return t >= k.z ? 0.0 : k.z - t;
}

// Both sides of the flow property K_{s,u}(x) = K_{s,t} K_{t,u} (x) applied to f.
// The outer integral against a sticky measure splits at the kink
// y* = W^+_{t,u}: below it K_{t,u}(y) no longer depends on y.
template <typename F>
std::pair<double, double> kernel_compose_fn(const BrownianPath& path, std::size_t s,
                                            std::size_t t, std::size_t u, double x,
                                            double theta, const F& f) {
  if (!(s <= t && t <= u)) throw std::invalid_argument("kernel_compose: need s <= t <= u");
  const double lhs = kernel_apply_fn(kernel_measure(path, s, u, x, theta), f);

  const KernelMeasure outer = kernel_measure(path, s, t, x, theta);
  const auto value_at = [&](double y) {
    return kernel_apply_fn(kernel_measure(path, t, u, y, theta), f);
  };
  double rhs;
  if (outer.kind == KernelMeasure::Kind::dirac) {
    rhs = value_at(outer.z);
  } else {
    const double lambda = 2.0 * theta;
    const double z = outer.z;
    const double y_star = std::clamp(
        path.values[t] - detail::segment_min(path, t, u), 0.0, z);
    // constant part: K_{t,u}(y) == K_{t,u}(0) for y <= y*
    const double c = value_at(0.0);
    const double const_part =
        c * (std::exp(-lambda * (z - y_star)) - std::exp(-lambda * z));
    const double smooth_part =
        lambda * detail::tilted_integral([&](double y) { return value_at(y); },
                                         lambda, y_star, z, z);
    rhs = c * std::exp(-lambda * z) + const_part + smooth_part;
  }
  return {lhs, rhs};
}

inline std::pair<double, double> kernel_compose(const BrownianPath& path, std::size_t s,
                                                std::size_t t, std::size_t u, double x,
                                                double theta, const TestFunction& f) {
  return kernel_compose_fn(path, s, t, u, x, theta, f.f);
}

// Residual of the flow SDE at x along one path, with left-point (Ito) sums:
//   K_{0,n}f(x) - f(x) - sum K_{0,i}(f' 1_{(0,inf)})(x) dW_i
//                      - (1/2) sum K_{0,i}(f'')(x) dt.
// Expected to shrink like sqrt(dt) under grid refinement.
inline double sde_residual(const BrownianPath& path, double x, double theta,
                           const TestFunction& f, std::size_t t_index) {
  if (!f.in_da)
    throw std::invalid_argument("sde_residual: f must satisfy the D(A) boundary condition");
  if (t_index >= path.values.size())
    throw std::out_of_range("sde_residual: t_index beyond path");
  if (!(x >= 0.0)) throw std::invalid_argument("sde_residual: x must be >= 0");

  const double lambda = 2.0 * theta;
  const auto fprime_ind = [&](double y) { return y > 0.0 ? f.df(y) : 0.0; };

  double sum_dw = 0.0;
  double sum_dt = 0.0;
  // incremental kernel state: running minimum and hit flag
  double run_min = path.values[0];
  const double level = path.values[0] - x;
  for (std::size_t i = 0; i < t_index; ++i) {
    run_min = std::min(run_min, path.values[i]);
    double k_fp, k_f2;
    if (run_min > level) {
      const double z = x + (path.values[i] - path.values[0]);
      k_fp = fprime_ind(z);
      k_f2 = f.d2f(z);
    } else {
      const double z = path.values[i] - run_min;
      if (z == 0.0) {
        k_fp = 0.0;
        k_f2 = f.d2f(0.0);
      } else {
        // one shared pass for both tilted integrals
        const std::size_t n_panels = detail::tilted_panels(lambda, 0.0, z);
        double i_fp = 0.0, i_f2 = 0.0;
        const double w = z / static_cast<double>(n_panels);
        for (std::size_t p = 0; p < n_panels; ++p) {
          const double lo = w * static_cast<double>(p);
          const double hi = p + 1 == n_panels ? z : lo + w;
          const double cc = 0.5 * (lo + hi), hh = 0.5 * (hi - lo);
          double a1 = 0.0, a2 = 0.0;
          for (std::size_t q = 0; q < GaussLegendre32::half; ++q) {
            const double dxq = hh * GaussLegendre32::node[q];
            for (double y : {cc - dxq, cc + dxq}) {
              const double e = GaussLegendre32::weight[q] * std::exp(-lambda * (z - y));
              a1 += e * fprime_ind(y);
              a2 += e * f.d2f(y);
            }
          }
          i_fp += a1 * hh;
          i_f2 += a2 * hh;
        }
        k_fp = lambda * i_fp;
        k_f2 = f.d2f(0.0) * std::exp(-lambda * z) + lambda * i_f2;
      }
    }
    sum_dw += k_fp * (path.values[i + 1] - path.values[i]);
    sum_dt += k_f2 * path.grid.dt;
  }
  const double k_f = kernel_apply_fn(kernel_measure(path, 0, t_index, x, theta), f.f);
  return k_f - f.f(x) - sum_dw - 0.5 * sum_dt;
}

}  // namespace stickyflow
