#pragma once
// Reproducible random streams. Every sample (or chain) gets an independent
// mt19937_64 seeded from a splitmix64-style hash of (master seed, tag,
// index), so results do not depend on how work is scheduled across threads.

#include <cstdint>
#include <random>

namespace slefvar {

// splitmix64 finalizer: the standard 64-bit avalanche mix.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Stream seed for a (tag, index) pair under a master seed. Tags separate
// logical families (samples vs. chains vs. auxiliary draws).
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index) {
  return mix64(mix64(master ^ mix64(tag)) + index);
}

inline constexpr std::uint64_t kTagSample = 0x73616d706c65ull;  // "sample"
inline constexpr std::uint64_t kTagChain = 0x636861696eull;     // "chain"
inline constexpr std::uint64_t kTagSle = 0x736c65ull;           // "sle"

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(eng_); }

  // Uniform integer in [lo, hi] inclusive.
  long uniform_int(long lo, long hi) {
    return std::uniform_int_distribution<long>(lo, hi)(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_;
};

}  // namespace slefvar
