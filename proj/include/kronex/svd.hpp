#pragma once

#include <cstdint>
#include <vector>

#include "kronex/dense.hpp"
#include "kronex/sparse.hpp"

namespace kronex {

// Truncated SVD: u (m x k, orthonormal columns), sigma (k, non-increasing,
// >= 0), v (k x n, orthonormal rows). degenerate_rank counts trailing sigma
// values at or below 1e-12 * sigma[0]; nonzero means the matrix had fewer
// than k numerically nonzero singular values.
struct SvdTriplet {
    DenseMatrix u;
    Vector sigma;
    DenseMatrix v;
    int degenerate_rank = 0;
};

struct SvdOptions {
    double tol = 1e-6;  // residual tolerance: ||M v_i - sigma_i u_i|| <= tol * sigma_0
    int max_iter = 300;
    std::uint64_t seed = 0;
    int oversample = 8;
    int check_every = 1;  // residual-check cadence, in iterations
};

// Randomized block subspace iteration with re-orthonormalization each pass.
// Deterministic for a fixed seed, for any thread count. Signs are fixed so the
// largest-magnitude entry of each left singular vector is positive. Throws
// ConvergenceError with the achieved residuals if max_iter is exhausted.
SvdTriplet truncated_svd(const SparseInteractions& m, std::int64_t k,
                         const SvdOptions& opts = {});

// Full singular spectrum of a small dense matrix, non-increasing.
std::vector<double> singular_values(const DenseMatrix& a);

}  // namespace kronex
