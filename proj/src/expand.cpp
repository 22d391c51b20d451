#include "kronex/expand.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <mutex>
#include <thread>

#include "kronex/checksum.hpp"
#include "kronex/error.hpp"
#include "kronex/io.hpp"

namespace kronex {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::plain: return "plain";
        case Variant::shuffle: return "shuffle";
        case Variant::sketch: return "sketch";
    }
    throw std::invalid_argument("unknown variant");
}

Variant variant_from_string(const std::string& s) {
    if (s == "plain") return Variant::plain;
    if (s == "shuffle") return Variant::shuffle;
    if (s == "sketch") return Variant::sketch;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

BlockPermutation block_permutation(std::int64_t p, std::int64_t q, std::uint64_t omega) {
    SplitMix64 rng(omega);
    BlockPermutation perm;
    perm.rows.resize(static_cast<std::size_t>(p));
    perm.cols.resize(static_cast<std::size_t>(q));
    for (std::int64_t i = 0; i < p; ++i) perm.rows[static_cast<std::size_t>(i)] = i;
    for (std::int64_t j = 0; j < q; ++j) perm.cols[static_cast<std::size_t>(j)] = j;
    shuffle_indices(perm.rows, rng);
    shuffle_indices(perm.cols, rng);
    return perm;
}

std::vector<Entry> emit_block_entries(double a, const SparseInteractions& r,
                                      std::uint64_t omega, Variant variant) {
    std::vector<Entry> out;
    if (a != 0.0) out.reserve(static_cast<std::size_t>(r.nnz()));
    emit_block(a, r, omega, variant,
               [&](std::int64_t i, std::int64_t j, double v) { out.push_back({i, j, v}); });
    return out;
}

namespace {

// Distinct indices from [0, n), sorted ascending: partial Fisher-Yates over
// the full index range, then sort the prefix.
std::vector<std::int64_t> sample_indices(std::int64_t n, std::int64_t count,
                                         SplitMix64& rng) {
    std::vector<std::int64_t> all(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t j =
            i + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(count));
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace

SketchResult sketch(const SparseInteractions& a, std::int64_t out_rows,
                    std::int64_t out_cols, std::uint64_t omega) {
    if (out_rows < 1 || out_cols < 1)
        throw std::invalid_argument("sketch: dims must be >= 1");
    if (out_rows > a.n_rows() || out_cols > a.n_cols())
        throw std::invalid_argument("sketch: requested " + std::to_string(out_rows) + "x" +
                                    std::to_string(out_cols) + " exceeds source " +
                                    std::to_string(a.n_rows()) + "x" +
                                    std::to_string(a.n_cols()));

    SplitMix64 rng(omega);
    SketchResult res;
    res.selected_rows = sample_indices(a.n_rows(), out_rows, rng);  // rows first
    res.selected_cols = sample_indices(a.n_cols(), out_cols, rng);

    std::vector<std::int32_t> col_map(static_cast<std::size_t>(a.n_cols()), -1);
    for (std::size_t t = 0; t < res.selected_cols.size(); ++t)
        col_map[static_cast<std::size_t>(res.selected_cols[t])] =
            static_cast<std::int32_t>(t);

    for (std::size_t r = 0; r < res.selected_rows.size(); ++r) {
        const std::int64_t src = res.selected_rows[r];
        auto cols = a.row_cols(src);
        auto vals = a.row_values(src);
        for (std::size_t t = 0; t < cols.size(); ++t) {
            const std::int32_t c = col_map[static_cast<std::size_t>(cols[t])];
            if (c >= 0)
                res.entries.push_back({static_cast<std::int64_t>(r), c, vals[t]});
        }
    }
    return res;
}

DirectoryShardSink::DirectoryShardSink(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create directory " + dir_.string() + ": " + ec.message());
}

namespace {

class FileShardWriter : public ShardWriter {
public:
    explicit FileShardWriter(const std::filesystem::path& path)
        : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open shard " + path.string());
    }
    void write(std::string_view bytes) override {
        out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out_) throw IoError("write failed for shard " + path_.string());
    }
    void close() override {
        out_.close();
        if (!out_) throw IoError("close failed for shard " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace

std::unique_ptr<ShardWriter> DirectoryShardSink::open_shard(const std::string& name) {
    return std::make_unique<FileShardWriter>(dir_ / name);
}

void DirectoryShardSink::write_manifest(const std::string& json_text) {
    const std::filesystem::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << json_text;
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

// Buffers CSV lines, folding them into the running checksum at flush time.
class ShardStream {
public:
    explicit ShardStream(ShardWriter* w) : writer_(w) { buf_.reserve(kFlush + 64); }

    void add(std::int64_t row, std::int64_t col, double value) {
        char tmp[96];
        char* p = tmp;
        char* const end = tmp + sizeof(tmp) - 1;
        p = std::to_chars(p, end, row).ptr;
        if (p >= end) throw DataError("shard line overflow");
        *p++ = ',';
        p = std::to_chars(p, end, col).ptr;
        if (p >= end) throw DataError("shard line overflow");
        *p++ = ',';
        p = std::to_chars(p, end, value).ptr;
        if (p >= end) throw DataError("shard line overflow");
        *p++ = '\n';
        buf_.append(tmp, static_cast<std::size_t>(p - tmp));
        ++nnz_;
        if (buf_.size() >= kFlush) flush();
    }

    void finish() {
        flush();
        writer_->close();
    }

    std::int64_t nnz() const { return nnz_; }
    std::uint64_t checksum() const { return checksum_; }

private:
    void flush() {
        if (buf_.empty()) return;
        checksum_ = fnv1a64(buf_, checksum_);
        writer_->write(buf_);
        buf_.clear();
    }

    static constexpr std::size_t kFlush = 1 << 20;
    ShardWriter* writer_;
    std::string buf_;
    std::int64_t nnz_ = 0;
    std::uint64_t checksum_ = kFnvOffset;
};

std::string shard_name(std::int64_t i_hat) {
    return "part-r" + std::to_string(i_hat) + ".csv";
}

struct ShardOutcome {
    ShardInfo info;
    std::int64_t skipped_zero_blocks = 0;
    std::vector<std::uint64_t> block_seeds;  // sketch variant only
};

void validate_plan(const ExpansionPlan& plan) {
    if (plan.reduced == nullptr || plan.base == nullptr)
        throw std::invalid_argument("expand: plan must reference reduced and base matrices");
    if (plan.reduced->matrix.rows() < 1 || plan.reduced->matrix.cols() < 1)
        throw std::invalid_argument("expand: reduced matrix is empty");
    if (max_abs(plan.reduced->matrix) > 1.0)
        throw std::invalid_argument(
            "expand: reduced matrix values outside [-1, 1]; expansion values "
            "would leave the rating range");
    if (plan.workers < 1) throw std::invalid_argument("expand: workers must be >= 1");
    if (plan.variant == Variant::sketch) {
        if (plan.sketch.rows < 1 || plan.sketch.cols < 1)
            throw std::invalid_argument("expand: sketch variant requires sketch dims");
        if (plan.sketch.rows > plan.base->n_rows() || plan.sketch.cols > plan.base->n_cols())
            throw std::invalid_argument("expand: sketch dims exceed base dims");
    }
}

}  // namespace

Manifest expand(const ExpansionPlan& plan, ShardSink& sink) {
    validate_plan(plan);
    const ReducedMatrix& reduced = *plan.reduced;
    const SparseInteractions& base = *plan.base;
    const std::int64_t m_hat = reduced.matrix.rows();
    const std::int64_t n_hat = reduced.matrix.cols();
    const bool is_sketch = plan.variant == Variant::sketch;
    const std::int64_t block_rows = is_sketch ? plan.sketch.rows : base.n_rows();
    const std::int64_t block_cols = is_sketch ? plan.sketch.cols : base.n_cols();

    Manifest manifest;
    manifest.variant = plan.variant;
    manifest.master_seed = plan.master_seed;
    manifest.rows = m_hat * block_rows;
    manifest.cols = n_hat * block_cols;
    manifest.reduced_rows = m_hat;
    manifest.reduced_cols = n_hat;
    manifest.base_rows = base.n_rows();
    manifest.base_cols = base.n_cols();
    manifest.base_nnz = base.nnz();
    manifest.sketch = is_sketch ? plan.sketch : SketchDims{};
    manifest.scale = plan.scale;
    manifest.dry_run = plan.dry_run;
    manifest.reduced_path = plan.reduced_path;
    manifest.base_path = plan.base_path;

    std::vector<ShardOutcome> outcomes(static_cast<std::size_t>(m_hat));

    auto run_shard = [&](std::int64_t i_hat) {
        ShardOutcome& oc = outcomes[static_cast<std::size_t>(i_hat)];
        oc.info.name = shard_name(i_hat);
        if (is_sketch)
            oc.block_seeds.resize(static_cast<std::size_t>(n_hat), 0);

        if (plan.dry_run) {
            for (std::int64_t j_hat = 0; j_hat < n_hat; ++j_hat) {
                const double a = reduced.matrix(i_hat, j_hat);
                const std::uint64_t omega = block_seed(plan.master_seed, i_hat, j_hat);
                if (is_sketch)
                    oc.block_seeds[static_cast<std::size_t>(j_hat)] = omega;
                if (a == 0.0) {
                    ++oc.skipped_zero_blocks;
                    continue;
                }
                if (is_sketch) {
                    const SketchResult s =
                        sketch(base, plan.sketch.rows, plan.sketch.cols, omega);
                    oc.info.nnz += static_cast<std::int64_t>(s.entries.size());
                } else {
                    oc.info.nnz += base.nnz();
                }
            }
            oc.info.complete = true;
            return;
        }

        std::unique_ptr<ShardWriter> writer = sink.open_shard(oc.info.name);
        ShardStream stream(writer.get());
        const std::int64_t row_off = i_hat * block_rows;
        for (std::int64_t j_hat = 0; j_hat < n_hat; ++j_hat) {
            const double a = reduced.matrix(i_hat, j_hat);
            const std::uint64_t omega = block_seed(plan.master_seed, i_hat, j_hat);
            if (is_sketch)
                oc.block_seeds[static_cast<std::size_t>(j_hat)] = omega;
            if (a == 0.0) {
                ++oc.skipped_zero_blocks;
                continue;
            }
            const std::int64_t col_off = j_hat * block_cols;
            if (is_sketch) {
                const SketchResult s =
                    sketch(base, plan.sketch.rows, plan.sketch.cols, omega);
                for (const Entry& e : s.entries)
                    stream.add(row_off + e.row, col_off + e.col, a * e.value);
            } else {
                emit_block(a, base, omega, plan.variant,
                           [&](std::int64_t i, std::int64_t j, double v) {
                               stream.add(row_off + i, col_off + j, v);
                           });
            }
        }
        stream.finish();
        oc.info.nnz = stream.nnz();
        oc.info.checksum = stream.checksum();
        oc.info.complete = true;
    };

    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::string first_error;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::int64_t i_hat = next.fetch_add(1);
            if (i_hat >= m_hat) return;
            try {
                run_shard(i_hat);
            } catch (const std::exception& e) {
                failed.store(true);
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };

    const int n_workers = static_cast<int>(std::min<std::int64_t>(plan.workers, m_hat));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    for (ShardOutcome& oc : outcomes) {
        if (oc.info.name.empty()) {  // never claimed (aborted run)
            const std::size_t idx = static_cast<std::size_t>(&oc - outcomes.data());
            oc.info.name = shard_name(static_cast<std::int64_t>(idx));
        }
        manifest.shards.push_back(oc.info);
        manifest.nnz_total += oc.info.nnz;
        manifest.skipped_zero_blocks += oc.skipped_zero_blocks;
        if (is_sketch) manifest.sketch_block_seeds.push_back(oc.block_seeds);
    }
    manifest.complete = !failed.load();

    if (failed.load()) {
        try {
            sink.write_manifest(manifest_to_json(manifest));
        } catch (...) {
            // The incomplete manifest is best-effort; the original failure wins.
        }
        throw IoError("expansion aborted: " + first_error);
    }

    sink.write_manifest(manifest_to_json(manifest));
    return manifest;
}

Manifest dry_run_manifest(const ReducedMatrix& reduced, std::int64_t base_rows,
                          std::int64_t base_cols, std::int64_t base_nnz,
                          const ExpansionPlan& plan) {
    if (plan.variant == Variant::sketch)
        throw std::invalid_argument(
            "dry_run_manifest: sketch runs need base data for per-block counts");
    if (base_rows < 1 || base_cols < 1 || base_nnz < 0)
        throw std::invalid_argument("dry_run_manifest: bad base header");
    const std::int64_t m_hat = reduced.matrix.rows();
    const std::int64_t n_hat = reduced.matrix.cols();

    Manifest manifest;
    manifest.variant = plan.variant;
    manifest.master_seed = plan.master_seed;
    manifest.rows = m_hat * base_rows;
    manifest.cols = n_hat * base_cols;
    manifest.reduced_rows = m_hat;
    manifest.reduced_cols = n_hat;
    manifest.base_rows = base_rows;
    manifest.base_cols = base_cols;
    manifest.base_nnz = base_nnz;
    manifest.scale = plan.scale;
    manifest.dry_run = true;
    manifest.reduced_path = plan.reduced_path;
    manifest.base_path = plan.base_path;

    for (std::int64_t i_hat = 0; i_hat < m_hat; ++i_hat) {
        ShardInfo info;
        info.name = shard_name(i_hat);
        info.complete = true;
        for (std::int64_t j_hat = 0; j_hat < n_hat; ++j_hat) {
            if (reduced.matrix(i_hat, j_hat) == 0.0)
                ++manifest.skipped_zero_blocks;
            else
                info.nnz += base_nnz;
        }
        manifest.nnz_total += info.nnz;
        manifest.shards.push_back(std::move(info));
    }
    return manifest;
}

}  // namespace kronex
