#pragma once

#include <cstdint>

namespace fatdual {

/// splitmix64: tiny, portable, deterministic across platforms.  We never use
/// <random> distributions because their output is not pinned by the standard
/// and byte-identical CLI runs are part of the contract.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform value in [0, n) by rejection; n must be nonzero.
  uint64_t below(uint64_t n) {
    uint64_t limit = ~uint64_t(0) - (~uint64_t(0) % n);
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  /// Signed integer in [-box, box].
  int64_t boxed(int64_t box) {
    return static_cast<int64_t>(below(uint64_t(2 * box + 1))) - box;
  }

  /// Derive an independent stream (used to hand sub-tasks their own seed).
  Rng fork(uint64_t salt) {
    return Rng(next() ^ (salt * 0x9E3779B97F4A7C15ULL + 0x1234567));
  }

private:
  uint64_t state_;
};

} // namespace fatdual
