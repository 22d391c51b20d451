#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kronex/sparse.hpp"

namespace kronex {

struct RawRecord {
    std::int64_t user_id;
    std::int64_t item_id;
    double rating;        // on the source platform's scale
    std::int64_t timestamp;  // carried but unused
};

struct RawRatings {
    std::vector<RawRecord> records;
};

// Centering constant and rescale factor mapping raw ratings into [-1, 1]:
// value = (raw - global_mean) / divisor.
struct RatingScale {
    double global_mean = 0.0;
    double divisor = 1.0;
};

struct CenterResult {
    SparseInteractions matrix;
    RatingScale scale;
    std::int64_t dropped_at_mean = 0;  // ratings exactly equal to the mean
    // Dense index -> original id, ascending by original id.
    std::vector<std::int64_t> user_ids;
    std::vector<std::int64_t> item_ids;
};

// Subtracts the mean of all observed ratings, divides by the largest absolute
// deviation, and drops ratings that center to exactly zero (they would be
// indistinguishable from unobserved cells). Ids are remapped to dense 0-based
// indices in ascending original-id order.
CenterResult center_and_rescale(const RawRatings& raw);

// MovieLens CSV: header "userId,movieId,rating,timestamp", then one record
// per line. Accepts LF or CRLF endings. Malformed rows report their 1-based
// line number.
RawRatings read_movielens_csv(const std::filesystem::path& path);

}  // namespace kronex
