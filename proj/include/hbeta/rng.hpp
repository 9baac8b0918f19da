#pragma once

// Counter-based random streams. A stream is keyed by (seed, k_1, ..., k_m); the
// i-th draw is a SplitMix64 finalizer applied to the keyed counter, so streams
// can be split per task and results do not depend on scheduling.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace hbeta {

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) : key_(mix(seed)) {
    for (auto k : keys) key_ = mix(key_ ^ mix(k + 0x632be59bd9b4e019ULL));
  }

  /// Independent child stream.
  [[nodiscard]] Rng split(std::uint64_t k) const {
    Rng r(0);
    r.key_ = mix(key_ ^ mix(k + 0x9e3779b97f4a7c15ULL));
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box-Muller (one value per call).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hbeta
