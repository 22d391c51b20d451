#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "kronex/error.hpp"
#include "kronex/expand.hpp"
#include "kronex/io.hpp"
#include "kronex/stats.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kronex;
using testutil::TempDir;

namespace {

std::vector<double> random_signed(std::size_t n, SplitMix64& rng, double zero_prob = 0.0) {
    std::vector<double> out(n);
    for (double& v : out)
        v = (rng.next_double() < zero_prob) ? 0.0 : 4.0 * rng.next_double() - 2.0;
    return out;
}

ReducedMatrix wrap_reduced(const DenseMatrix& m) {
    ReducedMatrix r;
    r.matrix = m;
    r.k = std::min(m.rows(), m.cols());
    r.source_rows = m.rows() * 8;
    r.source_cols = m.cols() * 8;
    return r;
}

}  // namespace

TEST_CASE("minkowski_product enumerates pairwise products") {
    const auto p = minkowski_product({1, 2}, {3, 4});
    CHECK(oracle::multisets_close(p, {3, 4, 6, 8}, 0.0));

    const auto z = minkowski_product({0}, {5, -2, 7});
    CHECK(z == std::vector<double>{0, 0, 0});

    std::vector<double> big1(20000, 1.0), big2(10000, 1.0);
    CHECK_THROWS_AS(minkowski_product(big1, big2), DataError);
}

TEST_CASE("minkowski_product matches a brute-force oracle") {
    SplitMix64 rng(131);
    const auto s1 = random_signed(50, rng);
    const auto s2 = random_signed(50, rng);
    std::vector<double> brute;
    for (double a : s1)
        for (double b : s2) brute.push_back(a * b);
    CHECK(oracle::multisets_close(minkowski_product(s1, s2), brute, 0.0));
}

TEST_CASE("minkowski_top_n returns the exact descending prefix") {
    SplitMix64 rng(137);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s1 = random_signed(40 + rng.next_below(20), rng, 0.05);
        const auto s2 = random_signed(40 + rng.next_below(20), rng, 0.05);
        std::vector<double> full;
        for (double a : s1)
            for (double b : s2) full.push_back(a * b);
        std::sort(full.begin(), full.end(), std::greater<>());

        for (std::int64_t n : {std::int64_t{0}, std::int64_t{1}, std::int64_t{17},
                               static_cast<std::int64_t>(full.size()),
                               static_cast<std::int64_t>(full.size()) + 50}) {
            const auto top = minkowski_top_n(s1, s2, n);
            const std::size_t expect =
                std::min<std::size_t>(static_cast<std::size_t>(n), full.size());
            REQUIRE(top.size() == expect);
            for (std::size_t i = 0; i < expect; ++i) CHECK(top[i] == full[i]);
        }
    }
}

TEST_CASE("predict_expanded_sums with a unit factor returns the base sums") {
    SplitMix64 rng(139);
    const SparseInteractions base = testutil::random_sparse(6, 7, 0.5, rng);
    const SumPrediction pred =
        predict_expanded_sums(DenseMatrix::Constant(1, 1, 1.0), base);
    CHECK(oracle::multisets_close(pred.row_sums, base.row_sums(), 1e-15));
    CHECK(oracle::multisets_close(pred.col_sums, base.col_sums(), 1e-15));
}

TEST_CASE("predict_expanded_sums equals sums of the materialized product") {
    SplitMix64 rng(149);
    for (int trial = 0; trial < 20; ++trial) {
        const DenseMatrix a = testutil::random_dense(2, 2, rng);
        const DenseMatrix b = testutil::random_dense(3, 3, rng);
        const DenseMatrix k = oracle::kronecker_dense(a, b);

        std::vector<double> krow(static_cast<std::size_t>(k.rows())),
            kcol(static_cast<std::size_t>(k.cols()));
        for (std::int64_t i = 0; i < k.rows(); ++i) krow[static_cast<std::size_t>(i)] = k.row(i).sum();
        for (std::int64_t j = 0; j < k.cols(); ++j) kcol[static_cast<std::size_t>(j)] = k.col(j).sum();

        const SumPrediction pred = predict_expanded_sums(a, testutil::dense_to_sparse(b));
        CHECK(oracle::multisets_close(pred.row_sums, krow, 1e-9));
        CHECK(oracle::multisets_close(pred.col_sums, kcol, 1e-9));
    }
}

TEST_CASE("proposition-style sum identity on random sparse pairs") {
    SplitMix64 rng(151);
    for (int trial = 0; trial < 30; ++trial) {
        const SparseInteractions a = testutil::random_sparse(
            1 + rng.next_below(8), 1 + rng.next_below(8), 0.5, rng);
        const SparseInteractions b = testutil::random_sparse(
            1 + rng.next_below(8), 1 + rng.next_below(8), 0.5, rng);
        const DenseMatrix k = oracle::kronecker_dense(a.to_dense(), b.to_dense());

        std::vector<double> krow, kcol;
        for (std::int64_t i = 0; i < k.rows(); ++i) krow.push_back(k.row(i).sum());
        for (std::int64_t j = 0; j < k.cols(); ++j) kcol.push_back(k.col(j).sum());

        CHECK(oracle::multisets_close(minkowski_product(a.row_sums(), b.row_sums()),
                                      krow, 1e-12));
        CHECK(oracle::multisets_close(minkowski_product(a.col_sums(), b.col_sums()),
                                      kcol, 1e-12));
    }
}

TEST_CASE("predict_expanded_spectrum on exact diagonal spectra") {
    DenseMatrix a(2, 2), b(2, 2);
    a << 2, 0, 0, 3;
    b << 5, 0, 0, 7;
    const SpectrumPrediction pred = predict_expanded_spectrum(
        oracle::jacobi_singular_values(a), oracle::jacobi_singular_values(b), true);
    CHECK(pred.values == std::vector<double>{21, 15, 14, 10});
    CHECK(pred.certified == 4);
    CHECK(!pred.truncated);

    // Against the materialized product.
    const auto truth = oracle::jacobi_singular_values(oracle::kronecker_dense(a, b));
    CHECK(oracle::multisets_close_rel(pred.values, truth, 1e-10));
}

TEST_CASE("predict_expanded_spectrum identity factor") {
    const std::vector<double> sigma = {9.5, 3.25, 1.125};
    const SpectrumPrediction pred = predict_expanded_spectrum({1.0}, sigma, true);
    CHECK(pred.values == sigma);
}

TEST_CASE("predict_expanded_spectrum certifies only the safe prefix") {
    // Known tail bound: 4 * 8 = 32. {40, 32} are certified; below that an
    // unseen product (4 * 7.9 = 31.6) interleaves ahead of 10.
    const SpectrumPrediction pred = predict_expanded_spectrum({4, 1}, {10, 8});
    CHECK(pred.values == std::vector<double>{40, 32, 10, 8});
    CHECK(pred.certified == 2);
    CHECK(pred.truncated);

    DenseMatrix a(2, 2), b(3, 3);
    a << 4, 0, 0, 1;
    b.setZero();
    b(0, 0) = 10;
    b(1, 1) = 8;
    b(2, 2) = 7.9;
    const auto truth = oracle::jacobi_singular_values(oracle::kronecker_dense(a, b));
    for (std::int64_t i = 0; i < pred.certified; ++i)
        CHECK(pred.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(truth[static_cast<std::size_t>(i)]).epsilon(1e-12));
    // And the next analytic value is wrong, which is the point of the bound.
    CHECK(pred.values[2] != doctest::Approx(truth[2]).epsilon(1e-6));
}

TEST_CASE("certified prefix is always a true spectrum prefix") {
    SplitMix64 rng(157);
    for (int trial = 0; trial < 10; ++trial) {
        const DenseMatrix a = testutil::random_dense(3, 3, rng);
        const DenseMatrix b = testutil::random_dense(4, 4, rng);
        const auto sa = oracle::jacobi_singular_values(a);
        auto sb = oracle::jacobi_singular_values(b);
        sb.resize(2);  // leading subset only
        const SpectrumPrediction pred = predict_expanded_spectrum(sa, sb);
        const auto truth = oracle::jacobi_singular_values(oracle::kronecker_dense(a, b));
        REQUIRE(pred.certified <= static_cast<std::int64_t>(truth.size()));
        for (std::int64_t i = 0; i < pred.certified; ++i)
            CHECK(std::abs(pred.values[static_cast<std::size_t>(i)] -
                           truth[static_cast<std::size_t>(i)]) <=
                  1e-8 * truth[0]);
    }
}

TEST_CASE("sample_expanded_ratings draws from the exact product distribution") {
    SplitMix64 rng(163);
    const SparseInteractions base = testutil::random_sparse(2, 2, 0.9, rng);
    REQUIRE(base.nnz() >= 2);
    const DenseMatrix rh = testutil::random_dense(2, 2, rng);

    // Identity factor: samples come from the base value multiset.
    const auto unit_samples =
        sample_expanded_ratings(DenseMatrix::Constant(1, 1, 1.0), base, 200, 5);
    for (double v : unit_samples) {
        bool member = false;
        for (double b : base.values()) member = member || (v == b);
        CHECK(member);
    }

    // Determinism.
    const auto s1 = sample_expanded_ratings(rh, base, 100, 42);
    const auto s2 = sample_expanded_ratings(rh, base, 100, 42);
    CHECK(s1 == s2);

    // Exact enumeration vs empirical histogram, total variation under 1%.
    const std::int64_t draws = 100000;
    const auto samples = sample_expanded_ratings(rh, base, draws, 7);
    std::map<double, double> expect;
    double combos = 0;
    for (std::int64_t i = 0; i < 2; ++i)
        for (std::int64_t j = 0; j < 2; ++j)
            for (double b : base.values()) {
                if (rh(i, j) == 0.0) continue;
                expect[rh(i, j) * b] += 1.0;
                combos += 1.0;
            }
    for (auto& [v, c] : expect) c /= combos;
    std::map<double, double> got;
    for (double v : samples) got[v] += 1.0 / static_cast<double>(draws);
    double tv = 0.0;
    for (const auto& [v, p] : expect) tv += std::abs(p - (got.count(v) ? got[v] : 0.0));
    for (const auto& [v, p] : got)
        if (!expect.count(v)) tv += p;
    CHECK(tv / 2.0 < 0.01);

    // Error paths.
    CHECK_THROWS_AS(sample_expanded_ratings(DenseMatrix::Zero(2, 2), base, 10, 1),
                    DataError);
    CHECK_THROWS_AS(sample_expanded_ratings(rh, SparseInteractions(2, 2, {}), 10, 1),
                    DataError);
    CHECK_THROWS_AS(sample_expanded_ratings(rh, base, 0, 1), std::invalid_argument);
}

TEST_CASE("ranked_report sorts, ranks and filters") {
    const RankedTable t = ranked_report({3, -1, 2}, true);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::pair<std::int64_t, double>{1, 3.0});
    CHECK(t.rows[1] == std::pair<std::int64_t, double>{2, 2.0});
    CHECK(t.removed == 1);

    const RankedTable none = ranked_report({-5, 0, -0.25}, true);
    CHECK(none.rows.empty());
    CHECK(none.removed == 3);

    SplitMix64 rng(167);
    const auto values = random_signed(200, rng, 0.1);
    const RankedTable all = ranked_report(values, false);
    CHECK(all.removed == 0);
    REQUIRE(all.rows.size() == values.size());
    for (std::size_t i = 1; i < all.rows.size(); ++i) {
        CHECK(all.rows[i].second <= all.rows[i - 1].second);
        CHECK(all.rows[i].first == static_cast<std::int64_t>(i) + 1);
    }
}

namespace {

struct DeskExpansion {
    TempDir tmp;
    std::filesystem::path dir;
    DenseMatrix rh;
    SparseInteractions base{1, 1, {{0, 0, 0.5}}};
    Manifest manifest;
};

DeskExpansion make_desk_expansion(std::uint64_t seed, Variant variant = Variant::plain) {
    DeskExpansion d;
    SplitMix64 rng(seed);
    d.rh = testutil::random_dense(2, 2, rng);
    d.base = testutil::random_sparse(3, 3, 0.7, rng);
    d.dir = d.tmp.path / "out";
    DirectoryShardSink sink(d.dir);
    const ReducedMatrix rhat = wrap_reduced(d.rh);
    ExpansionPlan plan;
    plan.reduced = &rhat;
    plan.base = &d.base;
    plan.variant = variant;
    plan.master_seed = seed;
    d.manifest = expand(plan, sink);
    return d;
}

}  // namespace

TEST_CASE("empirical_stats agrees with the analytic prediction") {
    const DeskExpansion d = make_desk_expansion(171);
    const StatReport emp = empirical_stats(d.dir);
    const SumPrediction pred = predict_expanded_sums(d.rh, d.base);
    CHECK(oracle::multisets_close(emp.row_sums, pred.row_sums, 1e-12));
    CHECK(oracle::multisets_close(emp.col_sums, pred.col_sums, 1e-12));
}

TEST_CASE("empirical_stats handles an all-zero expansion") {
    TempDir tmp;
    const auto dir = tmp.path / "out";
    DirectoryShardSink sink(dir);
    ReducedMatrix zero = wrap_reduced(DenseMatrix::Zero(2, 2));
    SplitMix64 rng(173);
    const SparseInteractions base = testutil::random_sparse(3, 3, 0.5, rng);
    ExpansionPlan plan;
    plan.reduced = &zero;
    plan.base = &base;
    const Manifest m = expand(plan, sink);
    CHECK(m.nnz_total == 0);
    CHECK(m.skipped_zero_blocks == 4);

    const StatReport rep = empirical_stats(dir);
    for (double v : rep.row_sums) CHECK(v == 0.0);
    for (double v : rep.col_sums) CHECK(v == 0.0);
}

TEST_CASE("empirical_stats detects tampering") {
    DeskExpansion d = make_desk_expansion(179);

    // Flip one byte in a shard.
    const auto shard = d.dir / d.manifest.shards[0].name;
    {
        std::fstream f(shard, std::ios::in | std::ios::out | std::ios::binary);
        REQUIRE(f);
        f.seekp(0);
        char c = 0;
        f.read(&c, 1);
        f.seekp(0);
        c = (c == '1') ? '2' : '1';
        f.write(&c, 1);
    }
    CHECK_THROWS_AS(empirical_stats(d.dir), VerificationError);
}

TEST_CASE("empirical_stats detects a doctored manifest count") {
    DeskExpansion d = make_desk_expansion(181);
    Manifest m = read_manifest(d.dir / "manifest.json");
    m.nnz_total += 1;
    write_manifest(d.dir / "manifest.json", m);
    CHECK_THROWS_AS(empirical_stats(d.dir), VerificationError);
}

TEST_CASE("empirical_stats enforces the memory budget and dry-run guard") {
    const DeskExpansion d = make_desk_expansion(191);
    EmpiricalOptions opts;
    opts.memory_budget = 8;  // absurdly small
    CHECK_THROWS_AS(empirical_stats(d.dir, opts), DataError);

    TempDir tmp;
    DirectoryShardSink sink(tmp.path / "dry");
    const ReducedMatrix rhat = wrap_reduced(d.rh);
    ExpansionPlan plan;
    plan.reduced = &rhat;
    plan.base = &d.base;
    plan.dry_run = true;
    expand(plan, sink);
    CHECK_THROWS_AS(empirical_stats(tmp.path / "dry"), DataError);
}

TEST_CASE("empirical spectrum of a materialized expansion matches theory") {
    const DeskExpansion d = make_desk_expansion(193);
    EmpiricalOptions opts;
    opts.svd_rank = 4;
    opts.svd.tol = 1e-10;
    opts.svd.max_iter = 2000;
    const StatReport rep = empirical_stats(d.dir, opts);
    REQUIRE(rep.singular_values.size() == 4);

    const SpectrumPrediction pred = predict_expanded_spectrum(
        oracle::jacobi_singular_values(d.rh),
        oracle::jacobi_singular_values(d.base.to_dense()), true);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(rep.singular_values[i] ==
              doctest::Approx(pred.values[i]).epsilon(1e-7));
}

TEST_CASE("stat report files are written and ranked") {
    const DeskExpansion d = make_desk_expansion(197);
    StatReport rep = empirical_stats(d.dir);
    rep.rating_values = {0.5, -0.25, 0.125};
    const auto out = d.tmp.path / "report";
    write_stat_report(out, rep);
    CHECK(std::filesystem::exists(out / "row_sums.tsv"));
    CHECK(std::filesystem::exists(out / "col_sums.tsv"));
    CHECK(std::filesystem::exists(out / "rating_values.tsv"));
    CHECK(std::filesystem::exists(out / "meta.json"));

    std::ifstream in(out / "row_sums.tsv");
    std::string line;
    double prev = std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        const double v = parse_double(line.substr(tab + 1));
        CHECK(v <= prev);
        CHECK(v > 0.0);  // non-positive entries filtered
        prev = v;
    }
}
