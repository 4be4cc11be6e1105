#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hyperts {

inline constexpr std::string_view kCodeVersion = "0.3.0";

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent RNG streams.
std::uint64_t mix64(std::uint64_t x);

/// Stream seed for (base seed, config id, fold id). Stable across
/// platforms and independent of scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t config_id,
                          std::uint64_t fold);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);

/// Uniform double in [0, 1) built from the top 53 bits, so the sequence
/// does not depend on the standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace hyperts
