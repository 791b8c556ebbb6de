#pragma once

#include "phlab/torus.hpp"

#include <cstdint>

namespace phlab {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `root`; independent of scheduling.
constexpr std::uint64_t stream_seed(std::uint64_t root, std::uint64_t index) {
  return mix64(mix64(root) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Per-task generator: SplitMix64 over the stream seed, cheap to construct.
/// Doubles are built from the top 53 bits.
class Rng {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t root, std::uint64_t index) : state_(stream_seed(root, index)) {}

  result_type operator()() { return next(); }
  std::uint64_t next() {
    const std::uint64_t out = mix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller.
  double normal();
  TorusPoint torus_point() {
    const double x = uniform();
    const double y = uniform();
    const double z = uniform();
    return TorusPoint(x, y, z);
  }

 private:
  std::uint64_t state_;
};

}  // namespace phlab
