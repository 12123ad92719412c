#pragma once

#include <cstdint>
#include <random>

namespace fadegp {

using Rng = std::mt19937_64;

// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream from (seed, stream index); chains, folds and prediction
// passes each get their own stream so thread scheduling never reorders draws.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream ^ 0x6a09e667f3bcc909ull));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

// Fresh distribution per call: normal_distribution caches a second variate,
// which would make results depend on the interleaving of callers.
inline double draw_normal(Rng& g) {
  return std::normal_distribution<double>(0.0, 1.0)(g);
}

inline double draw_uniform(Rng& g) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(g);
}

inline double draw_gamma(Rng& g, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(g);
}

}  // namespace fadegp
