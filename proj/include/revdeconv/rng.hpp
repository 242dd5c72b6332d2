#pragma once

#include <cstdint>
#include <random>

namespace revdeconv {

/// Seeded generator whose uniform and normal streams are identical on every
/// platform (the std distributions are implementation-defined).
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);

  /// Standard normal via Box-Muller.
  double normal();

  /// Laplace(0, scale) via inverse CDF.
  double laplace(double scale);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace revdeconv
