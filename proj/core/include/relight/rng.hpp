#pragma once

#include <cstdint>
#include <random>

namespace relight {

/// Deterministic uniform generator over mt19937_64 with explicit bit
/// mapping, so streams are reproducible across standard libraries (the
/// std::uniform_* distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t index(uint64_t n) { return n == 0 ? 0 : bits() % n; }

  int int_range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(index(static_cast<uint64_t>(hi - lo + 1)));
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// SplitMix64 step, used to derive independent child seeds.
inline uint64_t split_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace relight
