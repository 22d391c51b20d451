#include <doctest.h>

#include <fstream>

#include "kronex/error.hpp"
#include "kronex/io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kronex;
using testutil::TempDir;

TEST_CASE("format_double round-trips awkward values") {
    for (double v : {1.0 / 3.0,  0.1, -2.5e-17, 1e300, -0.0, 123456789.123456789,
                     5e-324}) {
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK_THROWS_AS(parse_double("1.2.3"), DataError);
    CHECK_THROWS_AS(parse_double(""), DataError);
}

TEST_CASE("sparse file round-trip is exact") {
    SplitMix64 rng(211);
    const SparseInteractions m = testutil::random_sparse(12, 9, 0.4, rng);
    const RatingScale scale{3.512345678901234, 1.4987654321};

    TempDir tmp;
    const auto path = tmp.path / "m.kxs";
    write_sparse(path, m, scale);

    CHECK(detect_artifact(path) == ArtifactKind::sparse);

    const SparseHeader h = read_sparse_header(path);
    CHECK(h.rows == 12);
    CHECK(h.cols == 9);
    CHECK(h.nnz == m.nnz());
    CHECK(h.scale.global_mean == scale.global_mean);
    CHECK(h.scale.divisor == scale.divisor);

    const SparseFile f = read_sparse(path);
    CHECK(f.scale.global_mean == scale.global_mean);
    const auto a = m.entries();
    const auto b = f.matrix.entries();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].row == b[i].row);
        CHECK(a[i].col == b[i].col);
        CHECK(a[i].value == b[i].value);  // bit-exact
    }
}

TEST_CASE("sparse reader rejects corrupted files") {
    TempDir tmp;
    const auto path = tmp.path / "bad.kxs";

    {
        std::ofstream out(path);
        out << "not-a-kronex-file\n";
    }
    CHECK_THROWS_AS(read_sparse(path), DataError);

    {
        std::ofstream out(path);
        out << "kronex-sparse 1\n2 2 3\n0 1\n0 0 0.5\n";  // claims 3, holds 1
    }
    CHECK_THROWS_AS(read_sparse(path), DataError);

    CHECK_THROWS_AS(read_sparse(tmp.path / "missing.kxs"), IoError);
}

TEST_CASE("reduced file round-trip is exact") {
    SplitMix64 rng(223);
    ReducedMatrix r;
    r.matrix = testutil::random_dense(4, 6, rng);
    r.k = 4;
    r.source_rows = 100;
    r.source_cols = 200;
    r.rescale_min = -0.123456789012345;
    r.rescale_max = 0.9876543210987654;

    TempDir tmp;
    const auto path = tmp.path / "r.kxr";
    write_reduced(path, r);
    CHECK(detect_artifact(path) == ArtifactKind::reduced);

    const ReducedMatrix back = read_reduced(path);
    CHECK(back.k == 4);
    CHECK(back.source_rows == 100);
    CHECK(back.source_cols == 200);
    CHECK(back.resize_method == "area-average");
    CHECK(back.rescale_min == r.rescale_min);
    CHECK(back.rescale_max == r.rescale_max);
    CHECK(max_abs_diff(back.matrix, r.matrix) == 0.0);
}

TEST_CASE("manifest json round-trip preserves every field") {
    Manifest m;
    m.variant = Variant::sketch;
    m.master_seed = 0xDEADBEEFCAFEBABEULL;
    m.rows = 123456;
    m.cols = 7890;
    m.nnz_total = 987654321;
    m.reduced_rows = 16;
    m.reduced_cols = 32;
    m.base_rows = 1000;
    m.base_cols = 1700;
    m.base_nnz = 65432;
    m.sketch = {120, 340};
    m.scale = {3.53, 1.47};
    m.skipped_zero_blocks = 3;
    m.reduced_path = "r.kxr";
    m.base_path = "m.kxs";
    m.shards = {{"part-r0.csv", 11, 0x0123456789ABCDEFULL, true},
                {"part-r1.csv", 22, 0xFEDCBA9876543210ULL, true}};
    m.sketch_block_seeds = {{1, 2}, {3, 4}};

    const Manifest back = manifest_from_json(manifest_to_json(m));
    CHECK(back.variant == Variant::sketch);
    CHECK(back.master_seed == m.master_seed);
    CHECK(back.rows == m.rows);
    CHECK(back.cols == m.cols);
    CHECK(back.nnz_total == m.nnz_total);
    CHECK(back.reduced_rows == 16);
    CHECK(back.base_cols == 1700);
    CHECK(back.base_nnz == 65432);
    CHECK(back.sketch.rows == 120);
    CHECK(back.sketch.cols == 340);
    CHECK(back.scale.global_mean == 3.53);
    CHECK(back.skipped_zero_blocks == 3);
    CHECK(back.reduced_path == "r.kxr");
    REQUIRE(back.shards.size() == 2);
    CHECK(back.shards[0].checksum == 0x0123456789ABCDEFULL);
    CHECK(back.shards[1].nnz == 22);
    CHECK(back.sketch_block_seeds == m.sketch_block_seeds);

    CHECK_THROWS_AS(manifest_from_json("{\"format\": \"other\"}"), DataError);
    CHECK_THROWS_AS(manifest_from_json("not json"), DataError);
}
