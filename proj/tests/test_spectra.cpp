#include <doctest.h>

#include <cmath>

#include "kronex/error.hpp"
#include "kronex/orthogonalize.hpp"
#include "kronex/svd.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kronex;

namespace {

// Block-diagonal matrix with one rank-1 checkerboard block per requested
// singular value: an s x s block of (-1)^(i+j) entries is the outer product
// of two +/-1 vectors of norm sqrt(s), so its only nonzero singular value is
// s while every entry stays in [-1, 1].
SparseInteractions integer_spectrum_matrix(const std::vector<int>& sigmas) {
    std::int64_t dim = 0;
    for (int s : sigmas) dim += s;
    std::vector<Entry> entries;
    std::int64_t off = 0;
    for (int s : sigmas) {
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < s; ++j) {
                const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                entries.push_back({off + i, off + j, sign});
            }
        off += s;
    }
    return {dim, dim, std::move(entries)};
}

}  // namespace

TEST_CASE("truncated_svd recovers an integer spectrum") {
    // Spectrum {3, 2, 1}; rank 2 request returns the two leading values.
    const SparseInteractions m = integer_spectrum_matrix({3, 2, 1});
    const SvdTriplet f = truncated_svd(m, 2, {.tol = 1e-10, .seed = 5});
    REQUIRE(f.sigma.size() == 2);
    CHECK(f.sigma(0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.sigma(1) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(f.degenerate_rank == 0);
}

TEST_CASE("truncated_svd at full rank matches the dense oracle") {
    SplitMix64 rng(17);
    const DenseMatrix a = testutil::random_dense(10, 7, rng);
    const SparseInteractions m = testutil::dense_to_sparse(a);
    const SvdTriplet f = truncated_svd(m, 7, {.tol = 1e-12, .seed = 1});
    const std::vector<double> expect = oracle::jacobi_singular_values(a);
    for (int i = 0; i < 7; ++i)
        CHECK(f.sigma(i) == doctest::Approx(expect[static_cast<std::size_t>(i)])
                                .epsilon(1e-8));
}

TEST_CASE("truncated_svd flags a rank-deficient request") {
    // Rank-1 outer product u v^T with ||u|| = 2, ||v|| = 3: 16 entries of 0.5
    // against 36 of 0.5 gives sigma_1 = 6 exactly.
    std::vector<Entry> entries;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 36; ++j) entries.push_back({i, j, 0.25});
    const SparseInteractions m(16, 36, std::move(entries));
    const SvdTriplet f = truncated_svd(m, 2, {.tol = 1e-8, .seed = 9});
    CHECK(f.sigma(0) == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(f.sigma(1) <= 1e-10);
    CHECK(f.degenerate_rank == 1);
}

TEST_CASE("truncated_svd satisfies its residual and orthogonality contract") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 12; ++trial) {
        const std::int64_t m_dim = 6 + static_cast<std::int64_t>(rng.next_below(7));
        const std::int64_t n_dim = 6 + static_cast<std::int64_t>(rng.next_below(7));
        const DenseMatrix a = testutil::random_dense(m_dim, n_dim, rng);
        const SparseInteractions m = testutil::dense_to_sparse(a);
        const std::int64_t k = std::min<std::int64_t>(4, std::min(m_dim, n_dim));
        const SvdTriplet f = truncated_svd(m, k, {.tol = 1e-9, .max_iter = 2000, .seed = static_cast<std::uint64_t>(trial)});

        // Spectrum against the oracle, top k, relative.
        const std::vector<double> expect = oracle::jacobi_singular_values(a);
        for (std::int64_t i = 0; i < k; ++i)
            CHECK(std::abs(f.sigma(i) - expect[static_cast<std::size_t>(i)]) <=
                  1e-6 * expect[0]);

        // Non-increasing and non-negative.
        for (std::int64_t i = 1; i < k; ++i) CHECK(f.sigma(i) <= f.sigma(i - 1));
        CHECK(f.sigma(k - 1) >= 0.0);

        // Orthogonality.
        const DenseMatrix utu = DenseMatrix(f.u.transpose() * f.u);
        const DenseMatrix vvt = DenseMatrix(f.v * f.v.transpose());
        CHECK(max_abs_diff(utu, DenseMatrix(DenseMatrix::Identity(k, k))) <= 1e-8);
        CHECK(max_abs_diff(vvt, DenseMatrix(DenseMatrix::Identity(k, k))) <= 1e-8);

        // Residuals.
        const DenseMatrix mv = m.multiply(DenseMatrix(f.v.transpose()));
        for (std::int64_t i = 0; i < k; ++i)
            CHECK((mv.col(i) - f.sigma(i) * f.u.col(i)).norm() <= 1e-9 * f.sigma(0) + 1e-13);
    }
}

TEST_CASE("truncated_svd is deterministic for a fixed seed") {
    SplitMix64 rng(31);
    const SparseInteractions m = testutil::random_sparse(20, 14, 0.3, rng);
    const SvdTriplet a = truncated_svd(m, 3, {.seed = 77});
    const SvdTriplet b = truncated_svd(m, 3, {.seed = 77});
    CHECK(max_abs_diff(a.u, b.u) == 0.0);
    CHECK((a.sigma - b.sigma).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(a.v, b.v) == 0.0);

    const SvdTriplet c = truncated_svd(m, 3, {.seed = 78});
    CHECK(a.sigma.isApprox(c.sigma, 1e-6));  // same values, different draw
}

TEST_CASE("truncated_svd rejects bad ranks and reports non-convergence") {
    SplitMix64 rng(37);
    const SparseInteractions m = testutil::random_sparse(6, 6, 0.5, rng);
    CHECK_THROWS_AS(truncated_svd(m, 0), std::invalid_argument);
    CHECK_THROWS_AS(truncated_svd(m, 7), std::invalid_argument);

    const SparseInteractions big = testutil::random_sparse(40, 30, 0.4, rng);
    CHECK_THROWS_AS(truncated_svd(big, 2, {.tol = 1e-15, .max_iter = 1, .seed = 3}),
                    ConvergenceError);
}

TEST_CASE("orthogonalize_columns identity cases") {
    // Already orthogonal stays put.
    DenseMatrix q(3, 2);
    q << 1, 0, 0, 1, 0, 0;
    CHECK(max_abs_diff(orthogonalize_columns(q), q) <= 1e-10);

    // diag(2, 3) maps to the identity.
    DenseMatrix d(2, 2);
    d << 2, 0, 0, 3;
    CHECK(max_abs_diff(orthogonalize_columns(d),
                       DenseMatrix(DenseMatrix::Identity(2, 2))) <= 1e-12);

    // A single column of norm 5 is normalized.
    DenseMatrix c(4, 1);
    c << 3, 4, 0, 0;
    DenseMatrix expect(4, 1);
    expect << 0.6, 0.8, 0, 0;
    CHECK(max_abs_diff(orthogonalize_columns(c), expect) <= 1e-12);
}

TEST_CASE("orthogonalize_columns is idempotent and scale invariant") {
    SplitMix64 rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        const DenseMatrix a = testutil::random_dense(9, 4, rng);
        const DenseMatrix once = orthogonalize_columns(a);
        CHECK(max_abs_diff(orthogonalize_columns(once), once) <= 1e-9);
        CHECK(max_abs_diff(orthogonalize_columns(DenseMatrix(3.7 * a)), once) <= 1e-9);
        CHECK(max_abs_diff(DenseMatrix(once.transpose() * once),
                           DenseMatrix(DenseMatrix::Identity(4, 4))) <= 1e-8);
        // Polar factor per the oracle.
        CHECK(max_abs_diff(once, oracle::polar_columns(a)) <= 1e-9);
    }
}

TEST_CASE("orthogonalize_columns rejects rank-deficient input") {
    DenseMatrix a(4, 2);
    a << 1, 2, 2, 4, -1, -2, 0.5, 1;  // second column is twice the first
    CHECK_THROWS_AS(orthogonalize_columns(a), DataError);
    DenseMatrix wide(2, 4);
    wide.setOnes();
    CHECK_THROWS_AS(orthogonalize_columns(wide), std::invalid_argument);
}

TEST_CASE("orthogonalize_rows mirrors the column case") {
    DenseMatrix r(1, 4);
    r << 2, 0, 0, 0;
    DenseMatrix expect(1, 4);
    expect << 1, 0, 0, 0;
    CHECK(max_abs_diff(orthogonalize_rows(r), expect) <= 1e-12);

    SplitMix64 rng(43);
    const DenseMatrix a = testutil::random_dense(3, 8, rng);
    const DenseMatrix o = orthogonalize_rows(a);
    CHECK(max_abs_diff(DenseMatrix(o * o.transpose()),
                       DenseMatrix(DenseMatrix::Identity(3, 3))) <= 1e-8);
    CHECK(max_abs_diff(o, DenseMatrix(oracle::polar_columns(DenseMatrix(a.transpose()))
                                          .transpose())) <= 1e-9);

    // Row-orthogonal input is unchanged.
    CHECK(max_abs_diff(orthogonalize_rows(o), o) <= 1e-10);
}

TEST_CASE("inv_sqrt_psd on fixed and random instances") {
    const DenseMatrix eye = DenseMatrix::Identity(3, 3);
    CHECK(max_abs_diff(inv_sqrt_psd(eye), eye) <= 1e-12);

    DenseMatrix d(2, 2);
    d << 4, 0, 0, 9;
    DenseMatrix expect(2, 2);
    expect << 0.5, 0, 0, 1.0 / 3.0;
    CHECK(max_abs_diff(inv_sqrt_psd(d), expect) <= 1e-12);

    SplitMix64 rng(47);
    for (int trial = 0; trial < 6; ++trial) {
        const DenseMatrix a = testutil::random_dense(8, 5, rng);
        const DenseMatrix s = DenseMatrix(a.transpose() * a);
        const DenseMatrix x = inv_sqrt_psd(s);
        CHECK(max_abs_diff(x, DenseMatrix(x.transpose())) <= 1e-10);
        CHECK(max_abs_diff(DenseMatrix(x * s * x),
                           DenseMatrix(DenseMatrix::Identity(5, 5))) <= 1e-8);
    }

    DenseMatrix asym(2, 2);
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(inv_sqrt_psd(asym), DataError);

    DenseMatrix singular(2, 2);
    singular << 1, 1, 1, 1;
    CHECK_THROWS_AS(inv_sqrt_psd(singular), DataError);
}
