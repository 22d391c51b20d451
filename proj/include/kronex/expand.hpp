#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kronex/ratings.hpp"
#include "kronex/reduce.hpp"
#include "kronex/rng.hpp"
#include "kronex/sparse.hpp"

namespace kronex {

enum class Variant { plain, shuffle, sketch };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Global index of local index i inside block-row/column i_hat, block size p.
inline std::int64_t index_map(std::int64_t i_hat, std::int64_t i, std::int64_t p) {
    if (i < 0 || i >= p)
        throw std::invalid_argument("index_map: local index " + std::to_string(i) +
                                    " outside [0, " + std::to_string(p) + ")");
    return i_hat * p + i;
}

// Exact inverse: (block coordinate, local index).
inline std::pair<std::int64_t, std::int64_t> index_unmap(std::int64_t g, std::int64_t p) {
    return {g / p, g % p};
}

// Per-block seed: two chained avalanche rounds over (master_seed, i_hat,
// j_hat), order-sensitive so (0,1) and (1,0) land apart. Independent of
// iteration order by construction.
inline std::uint64_t block_seed(std::uint64_t master_seed, std::int64_t i_hat,
                                std::int64_t j_hat) {
    std::uint64_t h = mix64(master_seed ^ (static_cast<std::uint64_t>(i_hat) + kMixGamma));
    return mix64(h ^ (static_cast<std::uint64_t>(j_hat) + kMixColSalt));
}

// Row and column permutations for one shuffled block, drawn from omega:
// rows first, then columns, each by Fisher-Yates.
struct BlockPermutation {
    std::vector<std::int64_t> rows;
    std::vector<std::int64_t> cols;
};
BlockPermutation block_permutation(std::int64_t p, std::int64_t q, std::uint64_t omega);

// Streams one Kronecker block: fn(local_row, local_col, a * r_ij) for every
// entry of r, permuted for the shuffle variant. a == 0 emits nothing.
template <typename Fn>
void emit_block(double a, const SparseInteractions& r, std::uint64_t omega,
                Variant variant, Fn&& fn) {
    if (a == 0.0) return;
    if (variant == Variant::plain) {
        for (std::int64_t i = 0; i < r.n_rows(); ++i) {
            auto cols = r.row_cols(i);
            auto vals = r.row_values(i);
            for (std::size_t t = 0; t < cols.size(); ++t)
                fn(i, static_cast<std::int64_t>(cols[t]), a * vals[t]);
        }
        return;
    }
    if (variant == Variant::shuffle) {
        const BlockPermutation perm = block_permutation(r.n_rows(), r.n_cols(), omega);
        for (std::int64_t i = 0; i < r.n_rows(); ++i) {
            auto cols = r.row_cols(i);
            auto vals = r.row_values(i);
            for (std::size_t t = 0; t < cols.size(); ++t)
                fn(perm.rows[static_cast<std::size_t>(i)],
                   perm.cols[static_cast<std::size_t>(cols[t])], a * vals[t]);
        }
        return;
    }
    throw std::invalid_argument("emit_block: sketch blocks are built via sketch()");
}

// Materialized form, for tests and small runs.
std::vector<Entry> emit_block_entries(double a, const SparseInteractions& r,
                                      std::uint64_t omega, Variant variant);

// Uniform row/column sub-sampling: out_rows distinct rows and out_cols
// distinct columns, selections sorted ascending (so the full selection is an
// identity copy), reindexed densely. Selection is returned for audit.
struct SketchResult {
    std::vector<std::int64_t> selected_rows;
    std::vector<std::int64_t> selected_cols;
    std::vector<Entry> entries;  // reindexed, row-major
};
SketchResult sketch(const SparseInteractions& a, std::int64_t out_rows,
                    std::int64_t out_cols, std::uint64_t omega);

struct SketchDims {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
};

// Everything an expansion needs; output bytes are a pure function of this
// struct, never of scheduling.
struct ExpansionPlan {
    Variant variant = Variant::plain;
    std::uint64_t master_seed = 0;
    const ReducedMatrix* reduced = nullptr;
    const SparseInteractions* base = nullptr;
    RatingScale scale{};
    SketchDims sketch;  // required when variant == sketch
    int workers = 1;
    bool dry_run = false;
    std::string reduced_path;  // recorded in the manifest for audit
    std::string base_path;
};

struct ShardInfo {
    std::string name;
    std::int64_t nnz = 0;
    std::uint64_t checksum = 0;
    bool complete = false;
};

struct Manifest {
    int version = 1;
    Variant variant = Variant::plain;
    std::uint64_t master_seed = 0;
    std::int64_t rows = 0;  // expanded dims
    std::int64_t cols = 0;
    std::int64_t nnz_total = 0;
    std::int64_t reduced_rows = 0;  // block grid
    std::int64_t reduced_cols = 0;
    std::int64_t base_rows = 0;
    std::int64_t base_cols = 0;
    std::int64_t base_nnz = 0;
    SketchDims sketch;  // zero when unused
    RatingScale scale{};
    std::int64_t skipped_zero_blocks = 0;
    bool dry_run = false;
    bool complete = true;
    std::string reduced_path;
    std::string base_path;
    std::vector<ShardInfo> shards;
    // Per block-row, per block-column omega values; recorded for the sketch
    // variant so selections can be audited without re-deriving them.
    std::vector<std::vector<std::uint64_t>> sketch_block_seeds;
};

// Destination for shard bytes. Injectable so failures are testable.
class ShardWriter {
public:
    virtual ~ShardWriter() = default;
    virtual void write(std::string_view bytes) = 0;  // may throw IoError
    virtual void close() = 0;
};

class ShardSink {
public:
    virtual ~ShardSink() = default;
    virtual std::unique_ptr<ShardWriter> open_shard(const std::string& name) = 0;
    virtual void write_manifest(const std::string& json_text) = 0;
};

// Writes part-r<i>.csv files plus manifest.json into a directory,
// creating it if needed.
class DirectoryShardSink : public ShardSink {
public:
    explicit DirectoryShardSink(std::filesystem::path dir);
    std::unique_ptr<ShardWriter> open_shard(const std::string& name) override;
    void write_manifest(const std::string& json_text) override;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

// Streams the full expansion to the sink, one shard per block-row, blocks in
// row-major order within a shard. Workers claim whole shards; any worker
// count yields byte-identical output. Dry runs compute the manifest without
// touching shard data. On shard I/O failure the manifest is still written
// with the failed shards flagged incomplete, then IoError is thrown.
Manifest expand(const ExpansionPlan& plan, ShardSink& sink);

// Size arithmetic from header data alone (plain/shuffle variants): the shard
// layout, dims and entry counts of an expansion that is never materialized.
// The sketch variant needs real base data for its per-block counts.
Manifest dry_run_manifest(const ReducedMatrix& reduced, std::int64_t base_rows,
                          std::int64_t base_cols, std::int64_t base_nnz,
                          const ExpansionPlan& plan);

}  // namespace kronex
