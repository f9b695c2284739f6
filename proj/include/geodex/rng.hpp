#pragma once

#include <cstdint>
#include <random>

namespace geodex {

/// The project's one pseudo-random source: std::mt19937_64 (its output sequence
/// is fixed by the standard) with a hand-written mapping to [0,1), so streams are
/// identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace geodex
