#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "segadv/common.hpp"

namespace segadv {

// Deterministic random source. The engine is the standard-specified
// mt19937_64; the floating-point and categorical draws are implemented here
// (not via std distributions) so sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Draws an index with the given (normalized) probabilities.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace segadv
