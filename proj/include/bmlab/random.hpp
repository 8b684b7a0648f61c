#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace bmlab {

/// The only random source in the library. Callers own it and pass it down.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20130611;

/// Uniform double in [0,1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Draws an index with probability proportional to weights (assumed to sum
/// to one up to rounding; the last positive entry absorbs the remainder).
std::size_t sample_discrete(std::span<const double> weights, Rng& rng);

}  // namespace bmlab
