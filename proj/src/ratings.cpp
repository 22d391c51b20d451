#include "kronex/ratings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include "kronex/error.hpp"

namespace kronex {

namespace {

// Maps original ids to dense 0-based indices in ascending-id order.
std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::int64_t dense_index(const std::vector<std::int64_t>& ids, std::int64_t id) {
    return std::lower_bound(ids.begin(), ids.end(), id) - ids.begin();
}

}  // namespace

CenterResult center_and_rescale(const RawRatings& raw) {
    if (raw.records.empty()) throw DataError("no ratings to center");

    double sum = 0.0;
    for (const RawRecord& r : raw.records) sum += r.rating;
    const double mean = sum / static_cast<double>(raw.records.size());

    double divisor = 0.0;
    for (const RawRecord& r : raw.records)
        divisor = std::max(divisor, std::abs(r.rating - mean));
    if (divisor == 0.0)
        throw DataError("all ratings identical (" + std::to_string(mean) +
                        "); rescale divisor would be zero");

    std::vector<std::int64_t> users, items;
    users.reserve(raw.records.size());
    items.reserve(raw.records.size());
    for (const RawRecord& r : raw.records) {
        users.push_back(r.user_id);
        items.push_back(r.item_id);
    }
    std::vector<std::int64_t> user_ids = sorted_unique(std::move(users));
    std::vector<std::int64_t> item_ids = sorted_unique(std::move(items));

    // Duplicate (user, item) pairs are checked on the raw records, before the
    // at-mean drop can hide one copy of a conflicting pair.
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    pairs.reserve(raw.records.size());
    for (const RawRecord& r : raw.records)
        pairs.emplace_back(dense_index(user_ids, r.user_id),
                           dense_index(item_ids, r.item_id));
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pairs[a] < pairs[b];
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (pairs[order[i]] == pairs[order[i - 1]]) {
            const RawRecord& r = raw.records[order[i]];
            throw DataError("duplicate rating for user " + std::to_string(r.user_id) +
                            ", item " + std::to_string(r.item_id));
        }
    }

    std::vector<Entry> entries;
    entries.reserve(raw.records.size());
    std::int64_t dropped = 0;
    for (std::size_t i = 0; i < raw.records.size(); ++i) {
        const double v = (raw.records[i].rating - mean) / divisor;
        if (v == 0.0) {
            ++dropped;
            continue;
        }
        entries.push_back({pairs[i].first, pairs[i].second, v});
    }

    SparseInteractions matrix(static_cast<std::int64_t>(user_ids.size()),
                              static_cast<std::int64_t>(item_ids.size()),
                              std::move(entries));
    return CenterResult{std::move(matrix), RatingScale{mean, divisor}, dropped,
                        std::move(user_ids), std::move(item_ids)};
}

namespace {

constexpr std::string_view kHeader = "userId,movieId,rating,timestamp";

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && !s.empty();
}

}  // namespace

RawRatings read_movielens_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    strip_cr(line);
    if (line != kHeader)
        throw DataError(path.string() + ":1: expected header '" + std::string(kHeader) +
                        "', got '" + line + "'");

    RawRatings raw;
    std::int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;

        std::string_view rest = line;
        std::string_view field[4];
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = rest.find(',');
            if (f < 3) {
                if (comma == std::string_view::npos)
                    throw DataError(path.string() + ":" + std::to_string(lineno) +
                                    ": expected 4 comma-separated fields");
                field[f] = rest.substr(0, comma);
                rest = rest.substr(comma + 1);
            } else {
                if (comma != std::string_view::npos)
                    throw DataError(path.string() + ":" + std::to_string(lineno) +
                                    ": expected 4 comma-separated fields");
                field[f] = rest;
            }
        }

        RawRecord rec{};
        if (!parse_field(field[0], rec.user_id) || !parse_field(field[1], rec.item_id) ||
            !parse_field(field[2], rec.rating) || !parse_field(field[3], rec.timestamp))
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": malformed record '" + line + "'");
        raw.records.push_back(rec);
    }
    return raw;
}

}  // namespace kronex
