#include "kronex/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>
#include <vector>

#include "kronex/error.hpp"
#include "kronex/rng.hpp"

namespace kronex {

namespace {

// Inverse-CDF sampler over weights (i+1)^{-alpha}.
class PowerLawSampler {
public:
    PowerLawSampler(std::int64_t n, double alpha) : cdf_(static_cast<std::size_t>(n)) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            acc += std::pow(static_cast<double>(i + 1), -alpha);
            cdf_[static_cast<std::size_t>(i)] = acc;
        }
        for (double& c : cdf_) c /= acc;
    }

    std::int64_t draw(SplitMix64& rng) const {
        const double u = rng.next_double();
        return std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin();
    }

private:
    std::vector<double> cdf_;
};

double half_star(double x) {
    const double r = std::round(x * 2.0) / 2.0;
    return std::clamp(r, 0.5, 5.0);
}

}  // namespace

RawRatings synthetic_ratings(const SyntheticConfig& config) {
    const std::int64_t users = config.n_users;
    const std::int64_t items = config.n_items;
    if (users < 1 || items < 1 || config.target_ratings < users + items)
        throw std::invalid_argument("synthetic_ratings: need target >= users + items");

    SplitMix64 rng(mix64(config.seed));

    // Latent factors with decaying per-component scales give the centered
    // matrix a decaying spectrum instead of a flat noise bulk.
    constexpr int kFactors = 24;
    std::vector<double> scale(kFactors);
    for (int f = 0; f < kFactors; ++f)
        scale[static_cast<std::size_t>(f)] = std::pow(static_cast<double>(f + 1), -0.6);
    std::vector<double> x(static_cast<std::size_t>(users) * kFactors);
    std::vector<double> y(static_cast<std::size_t>(items) * kFactors);
    for (std::int64_t u = 0; u < users; ++u)
        for (int f = 0; f < kFactors; ++f)
            x[static_cast<std::size_t>(u) * kFactors + f] =
                scale[static_cast<std::size_t>(f)] * rng.next_gaussian();
    for (std::int64_t i = 0; i < items; ++i)
        for (int f = 0; f < kFactors; ++f)
            y[static_cast<std::size_t>(i) * kFactors + f] =
                scale[static_cast<std::size_t>(f)] * rng.next_gaussian();

    auto rating_for = [&](std::int64_t u, std::int64_t i) {
        double affinity = 0.0;
        for (int f = 0; f < kFactors; ++f)
            affinity += x[static_cast<std::size_t>(u) * kFactors + f] *
                        y[static_cast<std::size_t>(i) * kFactors + f];
        return half_star(3.6 + 1.1 * affinity + 0.35 * rng.next_gaussian());
    };

    std::unordered_set<std::int64_t> seen;
    seen.reserve(static_cast<std::size_t>(config.target_ratings) * 2);
    RawRatings raw;
    raw.records.reserve(static_cast<std::size_t>(config.target_ratings));
    std::int64_t stamp = 789'000'000;

    auto add = [&](std::int64_t u, std::int64_t i) {
        if (!seen.insert(u * items + i).second) return;
        raw.records.push_back({u + 1, i + 1, rating_for(u, i), stamp++});
    };

    // Cover every user and item so ingestion recovers the full dims.
    for (std::int64_t u = 0; u < users; ++u)
        add(u, static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(items))));
    for (std::int64_t i = 0; i < items; ++i)
        add(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(users))), i);

    PowerLawSampler user_pop(users, 0.8);
    PowerLawSampler item_pop(items, 1.0);
    const std::int64_t max_attempts = config.target_ratings * 40;
    for (std::int64_t attempt = 0;
         attempt < max_attempts &&
         static_cast<std::int64_t>(raw.records.size()) < config.target_ratings;
         ++attempt)
        add(user_pop.draw(rng), item_pop.draw(rng));

    std::sort(raw.records.begin(), raw.records.end(), [](const RawRecord& a, const RawRecord& b) {
        return a.user_id != b.user_id ? a.user_id < b.user_id : a.item_id < b.item_id;
    });
    return raw;
}

void write_synthetic_csv(const std::filesystem::path& path, const SyntheticConfig& config) {
    const RawRatings raw = synthetic_ratings(config);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << "userId,movieId,rating,timestamp\n";
    for (const RawRecord& r : raw.records) {
        out << r.user_id << ',' << r.item_id << ',';
        // Half-star ratings print exactly with one decimal.
        const double rounded = r.rating * 2.0;
        out << static_cast<std::int64_t>(rounded) / 2;
        out << '.' << (static_cast<std::int64_t>(rounded) % 2 ? '5' : '0');
        out << ',' << r.timestamp << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace kronex
