// SPDX-License-Identifier: Apache-2.0
#ifndef GOSSIPAGG_RNG_HPP
#define GOSSIPAGG_RNG_HPP

#include <cstdint>

namespace gossipagg {

/// One output step of splitmix64 (Vigna's constants). Stateless form, used
/// both as the generator step and as the 64-bit mixing hash throughout the
/// library, so every derived quantity is reproducible across platforms.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG with cheap keyed substreams.
///
/// Simulations never share one sequential generator: every (host, round,
/// purpose) triple gets its own stream derived by hashing the key into the
/// master seed. Trajectories therefore do not depend on host iteration
/// order, and stay stable when unrelated draws are added elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
    return Rng(mix64(master ^ mix64(a ^ mix64(b ^ mix64(c)))));
  }

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n). Fixed-point multiply keeps the draw bias below
  /// 2^-64 without a rejection loop.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double real01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double real(double lo, double hi) { return lo + (hi - lo) * real01(); }

 private:
  std::uint64_t state_;
};

/// Substream purposes. Values are part of the reproducibility contract:
/// changing them changes every trajectory.
enum class Stream : std::uint64_t {
  InitValue = 1,
  AvgPeer = 2,
  AvgParcel = 3,
  CountPeer = 4,
  WalkLength = 5,
  WalkStep = 6,
  Churn = 7,
  TraceSynth = 8,
};

inline Rng substream(std::uint64_t master, std::uint64_t host, std::uint64_t round,
                     Stream purpose) {
  return Rng::substream(master, host, round, static_cast<std::uint64_t>(purpose));
}

}  // namespace gossipagg

#endif
