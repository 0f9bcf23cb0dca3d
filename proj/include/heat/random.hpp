#pragma once

#include <cstdint>
#include <random>

namespace heat {

// mt19937_64 output is fully specified by the standard; the helpers below avoid
// std:: distributions, whose algorithms are implementation-defined, so draws
// are identical across standard libraries.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Per-sample stream seed: independent of scheduling, so serial and parallel
// campaigns draw the same numbers.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x51ed2701f3a5c7b9ULL));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [lo, hi].
inline long long uniform_int(Rng& rng, long long lo, long long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long long>(rng() % span);
}

}  // namespace heat
