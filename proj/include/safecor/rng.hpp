#pragma once

#include <cstdint>

namespace safecor {

/// Deterministic splitmix64 generator. Every seeded code path in the library
/// goes through this instead of <random> distributions so that reports are
/// reproducible byte-for-byte across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t uniform_index(uint64_t n) { return next_u64() % n; }

  /// Stable combination of a base seed with a stream index, so that parallel
  /// episodes derive independent but reproducible substreams.
  static uint64_t mix(uint64_t seed, uint64_t stream) {
    Rng r(seed ^ (0x632be59bd9b4e019ull + stream * 0x9e3779b97f4a7c15ull));
    return r.next_u64();
  }

 private:
  uint64_t state_;
};

}  // namespace safecor
