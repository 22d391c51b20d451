#pragma once

#include "kronex/dense.hpp"

namespace kronex {

// Inverse square root of a symmetric PSD matrix via eigendecomposition:
// result X satisfies X * S * X ~= I. Rejects asymmetric input (beyond 1e-10
// relative) and eigenvalues at or below 1e-10 times the largest.
DenseMatrix inv_sqrt_psd(const DenseMatrix& s);

// Nearest column-orthogonal matrix in Frobenius norm: A (A^T A)^{-1/2}.
// Requires n_rows >= n_cols and full column rank.
DenseMatrix orthogonalize_columns(const DenseMatrix& a);

// Row mirror: (A A^T)^{-1/2} A. Requires n_cols >= n_rows and full row rank.
DenseMatrix orthogonalize_rows(const DenseMatrix& a);

}  // namespace kronex
