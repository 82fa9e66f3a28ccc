#pragma once

#include <cstdint>
#include <random>

namespace meshpinn {

/// splitmix64 finalizer; derives independent stream seeds from (seed, tag).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded generator with a portable uniform draw. The standard distributions
/// are implementation-defined, so they are avoided to keep sampled batches
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    double u = 0.0;
    while (u == 0.0) u = uniform();
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace meshpinn
