#include "kronex/stats.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "kronex/checksum.hpp"
#include "kronex/error.hpp"
#include "kronex/expand.hpp"
#include "kronex/io.hpp"
#include "kronex/rng.hpp"

namespace kronex {

std::vector<double> minkowski_product(const std::vector<double>& s1,
                                      const std::vector<double>& s2) {
    const std::int64_t total =
        static_cast<std::int64_t>(s1.size()) * static_cast<std::int64_t>(s2.size());
    if (total > kMinkowskiGuard)
        throw DataError("minkowski_product: " + std::to_string(total) +
                        " elements exceeds the materialization guard; use "
                        "minkowski_top_n");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total));
    for (double a : s1)
        for (double b : s2) out.push_back(a * b);
    return out;
}

namespace {

// Max-first frontier walk over two arrays arranged so products are
// non-increasing along both axes.
class ProductLattice {
public:
    ProductLattice(std::vector<double> a, std::vector<double> b)
        : a_(std::move(a)), b_(std::move(b)) {
        if (!a_.empty() && !b_.empty()) push(0, 0);
    }

    bool empty() const { return heap_.empty(); }
    double top() const { return heap_.top().value; }

    double pop() {
        const Node n = heap_.top();
        heap_.pop();
        push(n.i + 1, n.j);
        push(n.i, n.j + 1);
        return n.value;
    }

private:
    struct Node {
        double value;
        std::int64_t i, j;
        bool operator<(const Node& o) const { return value < o.value; }
    };

    void push(std::int64_t i, std::int64_t j) {
        if (i >= static_cast<std::int64_t>(a_.size()) ||
            j >= static_cast<std::int64_t>(b_.size()))
            return;
        const std::int64_t key = i * static_cast<std::int64_t>(b_.size()) + j;
        if (!visited_.insert(key).second) return;
        heap_.push({a_[static_cast<std::size_t>(i)] * b_[static_cast<std::size_t>(j)], i, j});
    }

    std::vector<double> a_, b_;
    std::priority_queue<Node> heap_;
    std::unordered_set<std::int64_t> visited_;
};

void drain_pair(ProductLattice& x, ProductLattice& y, std::vector<double>& out,
                std::size_t want) {
    while (out.size() < want && (!x.empty() || !y.empty())) {
        if (y.empty() || (!x.empty() && x.top() >= y.top()))
            out.push_back(x.pop());
        else
            out.push_back(y.pop());
    }
}

}  // namespace

std::vector<double> minkowski_top_n(std::vector<double> s1, std::vector<double> s2,
                                    std::int64_t n) {
    if (n < 0) throw std::invalid_argument("minkowski_top_n: n must be >= 0");
    const std::int64_t total =
        static_cast<std::int64_t>(s1.size()) * static_cast<std::int64_t>(s2.size());
    const std::size_t want = static_cast<std::size_t>(std::min<std::int64_t>(n, total));

    std::vector<double> p1, n1, p2, n2;
    std::int64_t z1 = 0, z2 = 0;
    for (double v : s1) {
        if (v > 0)
            p1.push_back(v);
        else if (v < 0)
            n1.push_back(v);
        else
            ++z1;
    }
    for (double v : s2) {
        if (v > 0)
            p2.push_back(v);
        else if (v < 0)
            n2.push_back(v);
        else
            ++z2;
    }

    std::vector<double> out;
    out.reserve(want);

    // Positive products first: pos*pos (both descending) and neg*neg (both
    // ascending by value, i.e. largest magnitude first).
    {
        std::vector<double> p1d = p1, p2d = p2, n1a = n1, n2a = n2;
        std::sort(p1d.begin(), p1d.end(), std::greater<>());
        std::sort(p2d.begin(), p2d.end(), std::greater<>());
        std::sort(n1a.begin(), n1a.end());
        std::sort(n2a.begin(), n2a.end());
        ProductLattice pp(std::move(p1d), std::move(p2d));
        ProductLattice nn(std::move(n1a), std::move(n2a));
        drain_pair(pp, nn, out, want);
    }

    // Then zeros.
    const std::int64_t zeros = z1 * static_cast<std::int64_t>(s2.size()) +
                               z2 * static_cast<std::int64_t>(s1.size()) - z1 * z2;
    for (std::int64_t i = 0; i < zeros && out.size() < want; ++i) out.push_back(0.0);

    // Then negative products, nearest zero first: pos ascending against neg
    // descending by value (smallest magnitude first).
    {
        std::vector<double> p1a = p1, p2a = p2, n1d = n1, n2d = n2;
        std::sort(p1a.begin(), p1a.end());
        std::sort(p2a.begin(), p2a.end());
        std::sort(n1d.begin(), n1d.end(), std::greater<>());
        std::sort(n2d.begin(), n2d.end(), std::greater<>());
        ProductLattice pn(std::move(p1a), std::move(n2d));
        ProductLattice np(std::move(n1d), std::move(p2a));
        drain_pair(pn, np, out, want);
    }

    return out;
}

namespace {

std::vector<double> dense_row_sums(const DenseMatrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (std::int64_t i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).sum();
    return out;
}

std::vector<double> dense_col_sums(const DenseMatrix& m) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (std::int64_t j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m.col(j).sum();
    return out;
}

}  // namespace

SumPrediction predict_expanded_sums(const DenseMatrix& reduced,
                                    const SparseInteractions& base) {
    SumPrediction out;
    out.row_sums = minkowski_product(dense_row_sums(reduced), base.row_sums());
    out.col_sums = minkowski_product(dense_col_sums(reduced), base.col_sums());
    return out;
}

SpectrumPrediction predict_expanded_spectrum(const std::vector<double>& sigma_reduced,
                                             const std::vector<double>& sigma_base,
                                             bool base_complete) {
    std::vector<double> sr, sb;
    for (double v : sigma_reduced)
        if (v > 0) sr.push_back(v);
    for (double v : sigma_base)
        if (v > 0) sb.push_back(v);
    if (sr.empty() || sb.empty())
        throw DataError("predict_expanded_spectrum: empty spectrum");

    SpectrumPrediction out;
    out.values = minkowski_product(sr, sb);
    std::sort(out.values.begin(), out.values.end(), std::greater<>());
    out.truncated = !base_complete;
    if (base_complete) {
        out.certified = static_cast<std::int64_t>(out.values.size());
    } else {
        // Products involving base values beyond the provided prefix are
        // bounded by max(reduced) * min(provided base); everything at or
        // above that bound is in its exact final position.
        const double bound = *std::max_element(sr.begin(), sr.end()) *
                             *std::min_element(sb.begin(), sb.end());
        std::int64_t certified = 0;
        while (certified < static_cast<std::int64_t>(out.values.size()) &&
               out.values[static_cast<std::size_t>(certified)] >= bound)
            ++certified;
        out.certified = certified;
    }
    return out;
}

std::vector<double> sample_expanded_ratings(const DenseMatrix& reduced,
                                            const SparseInteractions& base,
                                            std::int64_t count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample count must be >= 1");
    std::vector<double> rv;
    for (std::int64_t i = 0; i < reduced.rows(); ++i)
        for (std::int64_t j = 0; j < reduced.cols(); ++j)
            if (reduced(i, j) != 0.0) rv.push_back(reduced(i, j));
    if (rv.empty()) throw DataError("sample: reduced factor has no nonzero values");
    if (base.nnz() == 0) throw DataError("sample: base factor has no nonzero values");
    auto bv = base.values();

    SplitMix64 rng(mix64(seed));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t t = 0; t < count; ++t) {
        const double a = rv[static_cast<std::size_t>(rng.next_below(rv.size()))];
        const double b = bv[static_cast<std::size_t>(rng.next_below(bv.size()))];
        out.push_back(a * b);
    }
    return out;
}

RankedTable ranked_report(std::vector<double> values, bool drop_nonpositive) {
    std::sort(values.begin(), values.end(), std::greater<>());
    RankedTable table;
    table.rows.reserve(values.size());
    std::int64_t rank = 0;
    for (double v : values) {
        if (drop_nonpositive && v <= 0.0) {
            ++table.removed;
            continue;
        }
        table.rows.emplace_back(++rank, v);
    }
    return table;
}

namespace {

struct ShardScan {
    std::int64_t nnz = 0;
    std::uint64_t checksum = kFnvOffset;
};

// Checksums the raw bytes, then parses "row,col,value" lines.
ShardScan scan_shard(const std::filesystem::path& path, const Manifest& m,
                     std::vector<double>& row_acc, std::vector<double>& col_acc,
                     std::vector<Entry>* collect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open shard " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();

    ShardScan scan;
    scan.checksum = fnv1a64(bytes);

    const char* p = bytes.data();
    const char* end = p + bytes.size();
    while (p < end) {
        if (*p == '\n') {
            ++p;
            continue;
        }
        std::int64_t row = 0, col = 0;
        double value = 0.0;
        auto r1 = std::from_chars(p, end, row);
        if (r1.ec != std::errc{} || r1.ptr >= end || *r1.ptr != ',')
            throw DataError(path.string() + ": malformed shard line");
        auto r2 = std::from_chars(r1.ptr + 1, end, col);
        if (r2.ec != std::errc{} || r2.ptr >= end || *r2.ptr != ',')
            throw DataError(path.string() + ": malformed shard line");
        auto r3 = std::from_chars(r2.ptr + 1, end, value);
        if (r3.ec != std::errc{} || (r3.ptr < end && *r3.ptr != '\n'))
            throw DataError(path.string() + ": malformed shard line");
        p = r3.ptr;

        if (row < 0 || row >= m.rows || col < 0 || col >= m.cols)
            throw DataError(path.string() + ": entry (" + std::to_string(row) + ", " +
                            std::to_string(col) + ") outside manifest dims");
        row_acc[static_cast<std::size_t>(row)] += value;
        col_acc[static_cast<std::size_t>(col)] += value;
        if (collect) collect->push_back({row, col, value});
        ++scan.nnz;
    }
    return scan;
}

}  // namespace

StatReport empirical_stats(const std::filesystem::path& shard_dir,
                           const EmpiricalOptions& opts) {
    const Manifest m = read_manifest(shard_dir / "manifest.json");
    if (m.dry_run)
        throw DataError("empirical_stats: manifest is a dry run; no shard data exists");
    if (!m.complete)
        throw DataError("empirical_stats: manifest is marked incomplete");

    const std::int64_t accum_bytes = (m.rows + m.cols) * 8;
    std::int64_t load_bytes = accum_bytes;
    if (opts.svd_rank > 0) {
        // triplets + CSR/CSC + subspace workspace
        const std::int64_t b = opts.svd_rank + opts.svd.oversample;
        load_bytes += m.nnz_total * 24 + m.nnz_total * 24 + (m.rows + m.cols) * b * 8 * 6;
    }
    if (load_bytes > opts.memory_budget)
        throw DataError("empirical_stats: estimated " + std::to_string(load_bytes) +
                        " bytes exceeds memory budget " +
                        std::to_string(opts.memory_budget));

    std::vector<double> row_acc(static_cast<std::size_t>(m.rows), 0.0);
    std::vector<double> col_acc(static_cast<std::size_t>(m.cols), 0.0);
    std::vector<Entry> entries;
    std::vector<Entry>* collect = nullptr;
    if (opts.svd_rank > 0) {
        entries.reserve(static_cast<std::size_t>(m.nnz_total));
        collect = &entries;
    }

    std::int64_t total = 0;
    for (const ShardInfo& s : m.shards) {
        if (!s.complete)
            throw DataError("empirical_stats: shard " + s.name + " is incomplete");
        const ShardScan scan = scan_shard(shard_dir / s.name, m, row_acc, col_acc, collect);
        if (scan.checksum != s.checksum)
            throw VerificationError("checksum mismatch for shard " + s.name);
        if (scan.nnz != s.nnz)
            throw VerificationError("shard " + s.name + " has " + std::to_string(scan.nnz) +
                                    " entries, manifest says " + std::to_string(s.nnz));
        total += scan.nnz;
    }
    if (total != m.nnz_total)
        throw VerificationError("shards hold " + std::to_string(total) +
                                " entries, manifest says " + std::to_string(m.nnz_total));

    StatReport report;
    report.source = "empirical-expanded";
    report.row_sums = std::move(row_acc);
    report.col_sums = std::move(col_acc);
    std::sort(report.row_sums.begin(), report.row_sums.end(), std::greater<>());
    std::sort(report.col_sums.begin(), report.col_sums.end(), std::greater<>());

    if (opts.svd_rank > 0) {
        if (total == 0)
            throw DataError("empirical_stats: spectrum requested but expansion is empty");
        SparseInteractions mat(m.rows, m.cols, std::move(entries));
        const std::int64_t k = std::min<std::int64_t>(opts.svd_rank,
                                                      std::min(m.rows, m.cols));
        SvdTriplet svd = truncated_svd(mat, k, opts.svd);
        report.singular_values.assign(svd.sigma.data(), svd.sigma.data() + svd.sigma.size());
        report.spectrum_truncated = k < std::min(m.rows, m.cols);
    }
    return report;
}

namespace {

void write_table(const std::filesystem::path& path, const RankedTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    for (const auto& [rank, value] : table.rows)
        out << rank << '\t' << format_double(value) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_stat_report(const std::filesystem::path& dir, const StatReport& report,
                       bool drop_nonpositive) {
    std::filesystem::create_directories(dir);

    const RankedTable rows = ranked_report(report.row_sums, drop_nonpositive);
    const RankedTable cols = ranked_report(report.col_sums, drop_nonpositive);
    write_table(dir / "row_sums.tsv", rows);
    write_table(dir / "col_sums.tsv", cols);

    nlohmann::ordered_json meta;
    meta["source"] = report.source;
    meta["row_sums"] = {{"count", report.row_sums.size()},
                        {"removed_nonpositive", rows.removed}};
    meta["col_sums"] = {{"count", report.col_sums.size()},
                        {"removed_nonpositive", cols.removed}};

    if (!report.singular_values.empty()) {
        write_table(dir / "singular_values.tsv",
                    ranked_report(report.singular_values, false));
        meta["singular_values"] = {{"count", report.singular_values.size()},
                                   {"truncated", report.spectrum_truncated}};
        if (report.spectrum_certified >= 0)
            meta["singular_values"]["certified_prefix"] = report.spectrum_certified;
    }
    if (!report.rating_values.empty()) {
        write_table(dir / "rating_values.tsv", ranked_report(report.rating_values, false));
        meta["rating_values"] = {{"count", report.rating_values.size()}};
    }

    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw IoError("cannot open " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + (dir / "meta.json").string());
}

}  // namespace kronex
