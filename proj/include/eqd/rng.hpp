#pragma once

// Seeded random streams. Every random quantity in the library is drawn from a
// Stream derived from (seed, path...), so results depend only on the seed and
// the logical position of a replicate, never on scheduling.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace eqd {

/// Tags that keep substreams of different procedures apart.
enum class StreamTag : std::uint64_t {
  eqd_replicate = 1,
  alg1 = 2,
  alg1b = 3,
  alg2_outer = 4,
  alg2_select = 5,
  alg2_inner = 6,
  simulate = 7,
  study_replicate = 8,
  study_select = 9,
  study_boot = 10,
  qq_envelope = 11,
  stability = 12,
};

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : Stream(seed, std::span<const std::uint64_t>{}) {}

  Stream(std::uint64_t seed, std::span<const std::uint64_t> path) {
    std::uint64_t key = mix(seed ^ 0x6a09e667f3bcc908ULL);
    for (auto p : path) key = mix(key ^ mix(p + 0x9e3779b97f4a7c15ULL));
    engine_.seed(key);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on the open interval (0, 1); 53 random bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  // SplitMix64 finaliser; spreads nearby keys across the seed space.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

inline Stream substream(std::uint64_t seed, StreamTag tag,
                        std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint64_t> full{static_cast<std::uint64_t>(tag)};
  full.insert(full.end(), path.begin(), path.end());
  return Stream(seed, full);
}

/// A fresh 64-bit seed for a nested procedure (e.g. the selection run inside
/// one outer replicate of the double bootstrap).
inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag,
                                 std::initializer_list<std::uint64_t> path = {}) {
  return substream(seed, tag, path).next();
}

}  // namespace eqd
