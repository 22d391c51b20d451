#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kronex/dense.hpp"
#include "kronex/sparse.hpp"
#include "kronex/svd.hpp"

namespace kronex {

// Full materialization refuses above this many elements; use
// minkowski_top_n past it.
inline constexpr std::int64_t kMinkowskiGuard = 100'000'000;

// All pairwise products, |s1|*|s2| elements, nested-loop order.
std::vector<double> minkowski_product(const std::vector<double>& s1,
                                      const std::vector<double>& s2);

// Exact n largest pairwise products in non-increasing order, without
// materializing the full product multiset. Handles signed inputs.
std::vector<double> minkowski_top_n(std::vector<double> s1, std::vector<double> s2,
                                    std::int64_t n);

struct SumPrediction {
    std::vector<double> row_sums;
    std::vector<double> col_sums;
};

// Marginal sums of the plain Kronecker expansion, computed without
// materializing it: each side is the Minkowski product of the factors'
// marginal sums.
SumPrediction predict_expanded_sums(const DenseMatrix& reduced,
                                    const SparseInteractions& base);

struct SpectrumPrediction {
    std::vector<double> values;       // non-increasing
    std::int64_t certified = 0;       // exact prefix length
    bool truncated = false;           // base spectrum was a leading subset
};

// Singular spectrum of the expansion as pairwise products. When sigma_base is
// only the k leading values of the base spectrum, products from the unknown
// tail are bounded by max(sigma_reduced) * sigma_base[k-1]; the returned
// prefix at or above that bound is certified exact, the rest may interleave
// with missing products.
SpectrumPrediction predict_expanded_spectrum(const std::vector<double>& sigma_reduced,
                                             const std::vector<double>& sigma_base,
                                             bool base_complete = false);

// Uniform draws from the nonzero values of the plain expansion, without
// materializing it: one uniform nonzero of the reduced factor times one
// uniform nonzero of the base (exactly uniform over expansion nonzeros since
// their count is the product of the factors' counts).
std::vector<double> sample_expanded_ratings(const DenseMatrix& reduced,
                                            const SparseInteractions& base,
                                            std::int64_t count, std::uint64_t seed);

struct RankedTable {
    std::vector<std::pair<std::int64_t, double>> rows;  // (1-based rank, value)
    std::int64_t removed = 0;
};

// Non-increasing values paired with 1-based ranks; optionally drops
// non-positive values (counted) so the table is log-log plottable.
RankedTable ranked_report(std::vector<double> values, bool drop_nonpositive);

struct StatReport {
    std::string source;  // original | reduced | analytic-expanded | empirical-expanded
    std::vector<double> row_sums;         // non-increasing
    std::vector<double> col_sums;         // non-increasing
    std::vector<double> singular_values;  // non-increasing, possibly leading subset
    bool spectrum_truncated = false;
    std::int64_t spectrum_certified = -1;  // -1 = not applicable
    std::vector<double> rating_values;     // optional sample, non-increasing
};

struct EmpiricalOptions {
    std::int64_t svd_rank = 0;  // 0 = skip the spectrum
    SvdOptions svd{};
    std::int64_t memory_budget = std::int64_t{4} << 30;
};

// Streams a completed expansion once: verifies shard checksums and counts,
// accumulates exact row/column sums, and optionally runs a truncated SVD of
// the materialized matrix. Refuses dimensions whose accumulators (or, with
// svd_rank > 0, whose materialization) would exceed the memory budget.
StatReport empirical_stats(const std::filesystem::path& shard_dir,
                           const EmpiricalOptions& opts = {});

// One TSV per statistic ("rank<TAB>value") plus a meta.json sidecar.
void write_stat_report(const std::filesystem::path& dir, const StatReport& report,
                       bool drop_nonpositive = true);

}  // namespace kronex
