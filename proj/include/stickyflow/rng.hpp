#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace stickyflow {

// Counter-based splittable generator built on the SplitMix64 finalizer.
// A stream is identified by (seed, stream); the i-th output depends only on
// (seed, stream, i), so path k of an ensemble reproduces independently of the
// ensemble size and of how many draws other paths consumed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_key(seed, stream)) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(mix(seed + kGolden) ^ (mix(stream + 0x1F83D9ABFB41BD6Bull) | 1ull));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform on (0,1); never returns 0 or 1.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch; two uniforms per draw).
  double next_gaussian() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// One-off gaussian addressed by (seed, tag, index); used for per-step fill-in
// noise so that a step's draw does not depend on how many earlier draws happened.
inline double gaussian_at(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  CounterRng rng(seed, CounterRng::mix(tag + 0x9E3779B97F4A7C15ull * index));
  return rng.next_gaussian();
}

// Snaps a value to the 2^-32 dyadic lattice. Path values are kept on this
// lattice so that every +/- in path algebra is exact in double precision
// (exactness holds while magnitudes stay below 2^21, far beyond any grid used
// here); the flow composition identity is then exact rather than 1-ulp fuzzy.
inline double snap_to_lattice(double v) {
  if (!(std::abs(v) < 1048576.0)) return v;  // 2^20 guard; never hit in practice
  return std::ldexp(std::round(std::ldexp(v, 32)), -32);
}

}  // namespace stickyflow
