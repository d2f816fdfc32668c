#pragma once

#include <cstdint>
#include <cmath>

namespace eqr {

/**
 * Deterministic pseudo-randomness used throughout the simulators and
 * samplers.  Everything is hand-rolled on purpose: std::uniform_*
 * distributions are implementation-defined, which would break
 * byte-identical transcripts across standard libraries.
 */

/// One step of the splitmix64 sequence; advances the state in place.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ generator.  Seeded via splitmix64 so that any 64-bit
/// master seed (including 0) yields a well-mixed state.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Bernoulli draw: true with probability p (clamped to [0,1]).
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  /// Standard normal via Box-Muller on two uniform draws.
  double normal() {
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

/**
 * Derives an independent stream seed from a master seed and a stream
 * index.  Used to give the input sampler, the device and the extractor
 * seed generator their own decorrelated streams within one protocol run.
 */
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0x515891d9a99ad1e9ULL * (index + 1));
  // A few extra rounds so that adjacent indices land far apart.
  splitmix64(s);
  splitmix64(s);
  return splitmix64(s);
}

}  // namespace eqr
