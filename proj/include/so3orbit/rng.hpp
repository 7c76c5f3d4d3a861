#pragma once

#include <cstdint>
#include <random>

#include "so3orbit/types.hpp"

namespace so3orbit {

/// Portable seeded generator: std::mt19937_64 seeded with the splitmix64 hash
/// chain mix(mix(mix(seed) ^ stream) ^ index). The engine output is fully
/// specified by the standard, the std distributions are not, so uniforms and
/// normals are derived here by hand. Observation i of a run draws from its own
/// (seed, stream, i) state, which makes any index range reproducible alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Standard normal (Box-Muller, both variates used).
  double normal();
  /// Circular complex Gaussian with E|z|^2 = variance.
  cplx complex_normal(double variance = 1.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream tags keep the random draws of different roles independent.
enum RngStream : std::uint64_t {
  kStreamSignal = 1,
  kStreamDistribution = 2,
  kStreamRotation = 3,
  kStreamNoise = 4,
  kStreamExperiment = 5,
};

}  // namespace so3orbit
