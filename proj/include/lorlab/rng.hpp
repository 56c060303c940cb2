#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "lorlab/matrix.hpp"

namespace lorlab {

/// Seeded counter-style generator (splitmix64 core) with a Box-Muller normal
/// source. The same seed always yields the same stream of draws, on any
/// platform, which is what makes run records and checkpoints reproducible.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw. Box-Muller; the second value of each pair is
  /// cached, so the cache is part of the serializable state.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1], keeps log finite
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n));
  }

  struct State {
    std::uint64_t counter = 0;
    bool has_spare = false;
    double spare = 0.0;
  };

  State state() const { return {state_, has_spare_, spare_}; }
  void restore(const State& s) {
    state_ = s.counter;
    has_spare_ = s.has_spare;
    spare_ = s.spare;
  }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.next_normal();
  return m;
}

}  // namespace lorlab
