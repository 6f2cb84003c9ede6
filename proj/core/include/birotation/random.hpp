#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

#include "birotation/so3.hpp"

namespace birot {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t SplitMix64(std::uint64_t x);

/// Seed of sub-stream `stream` of `seed`. Streams are addressed by pair index
/// so results do not depend on evaluation order.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

/// Portable random source: std::mt19937_64 (whose output sequence is fixed by
/// the standard) with distributions implemented here, since the standard
/// library's distributions differ between implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  /// Uniform integer in [0, n).
  std::size_t UniformIndex(std::size_t n);

  /// Standard normal (Marsaglia polar method).
  double Normal();

  /// Uniformly distributed unit vector.
  Vec3 UnitVector();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace birot
