#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace coordtune {

/// Every stochastic component draws from this engine. Seeds are always derived
/// through derive_seed() so that streams for different roles never collide.
using Rng = std::mt19937_64;

/// 64-bit FNV-1a over raw bytes; stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for a named sub-stream of `base`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept;

/// Seed for a (key, role) pair under `base`, e.g. (base_seed, PointKey, "weights").
std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::string_view role) noexcept;

/// Uniform integer in [0, n) by rejection; independent of the standard
/// library's distribution implementation.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace coordtune
