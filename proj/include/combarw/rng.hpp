#pragma once

#include <cstdint>
#include <random>

namespace combarw {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Keyed mix of two words; used as a counter-based PRF.
constexpr std::uint64_t mix(std::uint64_t key, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(key) ^ (counter * 0xD6E8FEB86659FD93ULL + 0x2545F4914F6CDD1DULL));
}

/// Independent stream seed for (master, stream id). Used for replica seeding.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix(master ^ 0xA0761D6478BD642FULL, stream);
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

inline Rng make_rng(std::uint64_t seed) {
  return Rng(splitmix64(seed));
}

/// Geo(p) supported on {1, 2, ...}.
template <class G>
int geometric(G& gen, double p) {
  return 1 + std::geometric_distribution<int>(p)(gen);
}

/// Geo_0(p) supported on {0, 1, ...}.
template <class G>
int geometric0(G& gen, double p) {
  return std::geometric_distribution<int>(p)(gen);
}

template <class G>
bool bernoulli(G& gen, double p) {
  return std::bernoulli_distribution(p)(gen);
}

inline double sleep_probability(double lambda) { return lambda / (1.0 + lambda); }

}  // namespace combarw
