#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace kronex {

// splitmix64 increment and finalizer constants (Stafford mix13), plus a
// second published constant (xxHash prime 2) used to separate the row and
// column arguments of block_seed. These exact values are echoed into every
// expansion manifest so that outputs remain reproducible byte-for-byte.
inline constexpr std::uint64_t kMixGamma = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kMixMul1 = 0xBF58476D1CE4E5B9ULL;
inline constexpr std::uint64_t kMixMul2 = 0x94D049BB133111EBULL;
inline constexpr std::uint64_t kMixColSalt = 0xC2B2AE3D27D4EB4FULL;

constexpr std::uint64_t mix64(std::uint64_t x) {
    x += kMixGamma;
    x = (x ^ (x >> 30)) * kMixMul1;
    x = (x ^ (x >> 27)) * kMixMul2;
    return x ^ (x >> 31);
}

// Deterministic 64-bit stream. One instance per independently seeded task;
// never shared across threads.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kMixGamma;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * kMixMul1;
        z = (z ^ (z >> 27)) * kMixMul2;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound), bound > 0, by rejection (no modulo bias).
    std::uint64_t next_below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    // Standard normal via Box-Muller. One value per call so the draw count
    // stays predictable.
    double next_gaussian() {
        double u1;
        do {
            u1 = next_double();
        } while (u1 == 0.0);
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// In-place Fisher-Yates shuffle driven by rng.
inline void shuffle_indices(std::vector<std::int64_t>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace kronex
