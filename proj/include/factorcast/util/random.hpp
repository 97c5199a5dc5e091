#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace factorcast {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Maps a 64-bit hash to a double in [0, 1).
constexpr double unit_interval(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Seed for a named sub-stream of a root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a over the label
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return mix64(root ^ mix64(h));
}

using Rng = std::mt19937_64;

}  // namespace factorcast
