#pragma once

#include <cmath>
#include <cstdint>

namespace swincap {

/// SplitMix64 generator. Every random decision in the project (weight init,
/// shuffling, corpus synthesis) flows from one of these, seeded from the
/// single user-facing seed, so runs are reproducible across platforms.
/// std::random distributions are implementation-defined and deliberately
/// avoided.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Splits off an independent stream keyed by `stream`. The parent state is
  /// untouched, so fork(k) is a pure function of (seed, k).
  SplitMix64 fork(std::uint64_t stream) const {
    SplitMix64 tmp(state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 0x632be59bd9b4e019ULL)));
    return SplitMix64(tmp.next());
  }

  /// Uniform in [0, 1) with 53 bits of entropy.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  /// Standard normal via Box-Muller.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Normal(0, std^2) truncated to +-2 std via rejection.
  double next_trunc_normal(double std_dev) {
    double z = next_normal();
    while (z < -2.0 || z > 2.0) z = next_normal();
    return z * std_dev;
  }

 private:
  std::uint64_t state_;
};

}  // namespace swincap
