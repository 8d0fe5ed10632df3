#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gcpt {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and a label, so that
/// different pipeline stages (feature init, sampling, eval seeds, ...) never
/// share a stream. FNV-1a over the label, mixed with splitmix64.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t x = base ^ h;
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) {
    return derive_seed(base ^ (0x9e3779b97f4a7c15ull * (index + 1)), label);
}

/// Uniform draw from [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace gcpt
