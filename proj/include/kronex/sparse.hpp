#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kronex/dense.hpp"

namespace kronex {

struct Entry {
    std::int64_t row;
    std::int64_t col;
    double value;
};

// Immutable sparse interaction matrix with dual CSR/CSC storage. Values are
// centered, rescaled ratings: nonzero and in [-1, 1]. Indices are 0-based and
// in range. Construction validates and rejects bad input; it never repairs.
//
// CSC is kept alongside CSR so that both M*X and M^T*X can be computed with
// one independent output row per matrix row/column, which keeps results
// identical for any thread count.
class SparseInteractions {
public:
    SparseInteractions(std::int64_t n_rows, std::int64_t n_cols,
                       std::vector<Entry> entries);

    std::int64_t n_rows() const { return n_rows_; }
    std::int64_t n_cols() const { return n_cols_; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }

    // CSR row access: column indices and values of row i, sorted by column.
    std::span<const std::int32_t> row_cols(std::int64_t i) const;
    std::span<const double> row_values(std::int64_t i) const;

    // All stored values in CSR (row-major) order.
    std::span<const double> values() const { return values_; }

    // Marginal sums; one element per row/column, zero for empty ones.
    std::vector<double> row_sums() const;
    std::vector<double> col_sums() const;
    double value_sum() const;

    // Y = M * X with X (n_cols x b) -> (n_rows x b).
    DenseMatrix multiply(const DenseMatrix& x) const;
    // Y = M^T * X with X (n_rows x b) -> (n_cols x b).
    DenseMatrix multiply_transposed(const DenseMatrix& x) const;

    DenseMatrix to_dense() const;

    // Entries in CSR order.
    std::vector<Entry> entries() const;

private:
    std::int64_t n_rows_ = 0;
    std::int64_t n_cols_ = 0;
    // CSR
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> col_idx_;
    std::vector<double> values_;
    // CSC
    std::vector<std::int64_t> col_ptr_;
    std::vector<std::int32_t> row_idx_;
    std::vector<double> col_values_;
};

}  // namespace kronex
