#pragma once

#include <cstdint>
#include <filesystem>

#include "kronex/ratings.hpp"

namespace kronex {

struct SyntheticConfig {
    std::int64_t n_users = 1000;
    std::int64_t n_items = 1700;
    std::int64_t target_ratings = 70'000;
    std::uint64_t seed = 0;
};

// Deterministic stand-in for a small ratings dump: half-star ratings in
// [0.5, 5.0] driven by latent factors with decaying scales (so the centered
// matrix has a decaying singular spectrum), user/item popularity drawn from
// power laws, and every user and item observed at least once.
RawRatings synthetic_ratings(const SyntheticConfig& config);

// Same data written as a MovieLens-format CSV.
void write_synthetic_csv(const std::filesystem::path& path, const SyntheticConfig& config);

}  // namespace kronex
