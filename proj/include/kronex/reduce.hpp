#pragma once

#include <cstdint>
#include <string>

#include "kronex/dense.hpp"
#include "kronex/sparse.hpp"
#include "kronex/svd.hpp"

namespace kronex {

// Small dense surrogate of a large sparse matrix, values in [-1, 1], carrying
// the provenance needed to reconstruct the run that produced it.
struct ReducedMatrix {
    DenseMatrix matrix;
    std::int64_t k = 0;
    std::int64_t source_rows = 0;
    std::int64_t source_cols = 0;
    std::string resize_method = "area-average";
    double rescale_min = 0.0;  // extremes of the pre-rescale reconstruction
    double rescale_max = 0.0;
};

// Intermediate factors exposed for verification: the singular values of
// pre_rescale equal sigma exactly because u_tilde has orthonormal columns and
// v_tilde orthonormal rows.
struct ReduceResult {
    ReducedMatrix reduced;
    DenseMatrix u_tilde;      // out_rows x k
    Vector sigma;             // k leading singular values of the source
    DenseMatrix v_tilde;      // k x out_cols
    DenseMatrix pre_rescale;  // u_tilde * diag(sigma) * v_tilde
};

// Reduction pipeline: truncated SVD at rank k = min(out_rows, out_cols),
// area-average resize of both singular-vector factors, polar
// re-orthogonalization, reconstruction, then division by (max - min).
// Requires out_rows <= rows/4 and out_cols <= cols/4.
ReduceResult reduce_full(const SparseInteractions& r, std::int64_t out_rows,
                         std::int64_t out_cols, const SvdOptions& svd = {});

ReducedMatrix reduce(const SparseInteractions& r, std::int64_t out_rows,
                     std::int64_t out_cols, const SvdOptions& svd = {});

}  // namespace kronex
