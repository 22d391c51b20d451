#include "kronex/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kronex/error.hpp"

namespace kronex {

namespace {

std::string entry_str(const Entry& e) {
    return "(" + std::to_string(e.row) + ", " + std::to_string(e.col) + ")";
}

}  // namespace

SparseInteractions::SparseInteractions(std::int64_t n_rows, std::int64_t n_cols,
                                       std::vector<Entry> entries)
    : n_rows_(n_rows), n_cols_(n_cols) {
    if (n_rows <= 0 || n_cols <= 0)
        throw DataError("sparse matrix dims must be positive, got " +
                        std::to_string(n_rows) + "x" + std::to_string(n_cols));
    if (n_rows > std::numeric_limits<std::int32_t>::max() ||
        n_cols > std::numeric_limits<std::int32_t>::max())
        throw DataError("sparse matrix dims exceed 32-bit index storage");

    for (const Entry& e : entries) {
        if (e.row < 0 || e.row >= n_rows || e.col < 0 || e.col >= n_cols)
            throw DataError("entry " + entry_str(e) + " outside " +
                            std::to_string(n_rows) + "x" + std::to_string(n_cols));
        if (e.value == 0.0 || !std::isfinite(e.value))
            throw DataError("entry " + entry_str(e) + " has zero or non-finite value");
        if (std::abs(e.value) > 1.0)
            throw DataError("entry " + entry_str(e) + " value " +
                            std::to_string(e.value) + " outside [-1, 1]");
    }

    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col)
            throw DataError("duplicate entry at " + entry_str(entries[i]));
    }

    const std::size_t nz = entries.size();
    row_ptr_.assign(static_cast<std::size_t>(n_rows) + 1, 0);
    col_idx_.resize(nz);
    values_.resize(nz);
    for (std::size_t e = 0; e < nz; ++e) {
        ++row_ptr_[static_cast<std::size_t>(entries[e].row) + 1];
        col_idx_[e] = static_cast<std::int32_t>(entries[e].col);
        values_[e] = entries[e].value;
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_rows); ++i)
        row_ptr_[i + 1] += row_ptr_[i];

    // CSC by counting sort from the (row,col)-sorted entries; rows within a
    // column come out sorted as well.
    col_ptr_.assign(static_cast<std::size_t>(n_cols) + 1, 0);
    row_idx_.resize(nz);
    col_values_.resize(nz);
    for (std::size_t e = 0; e < nz; ++e)
        ++col_ptr_[static_cast<std::size_t>(entries[e].col) + 1];
    for (std::size_t j = 0; j < static_cast<std::size_t>(n_cols); ++j)
        col_ptr_[j + 1] += col_ptr_[j];
    std::vector<std::int64_t> cursor(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::size_t r = 0; r < static_cast<std::size_t>(n_rows); ++r) {
        for (std::int64_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
            const std::int32_t c = col_idx_[static_cast<std::size_t>(e)];
            const std::int64_t dst = cursor[static_cast<std::size_t>(c)]++;
            row_idx_[static_cast<std::size_t>(dst)] = static_cast<std::int32_t>(r);
            col_values_[static_cast<std::size_t>(dst)] = values_[static_cast<std::size_t>(e)];
        }
    }
}

std::span<const std::int32_t> SparseInteractions::row_cols(std::int64_t i) const {
    const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]);
    return {col_idx_.data() + b, e - b};
}

std::span<const double> SparseInteractions::row_values(std::int64_t i) const {
    const auto b = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i)]);
    const auto e = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(i) + 1]);
    return {values_.data() + b, e - b};
}

std::vector<double> SparseInteractions::row_sums() const {
    std::vector<double> sums(static_cast<std::size_t>(n_rows_), 0.0);
    for (std::int64_t i = 0; i < n_rows_; ++i) {
        double s = 0.0;
        for (double v : row_values(i)) s += v;
        sums[static_cast<std::size_t>(i)] = s;
    }
    return sums;
}

std::vector<double> SparseInteractions::col_sums() const {
    std::vector<double> sums(static_cast<std::size_t>(n_cols_), 0.0);
    for (std::int64_t j = 0; j < n_cols_; ++j) {
        double s = 0.0;
        const auto b = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j)]);
        const auto e = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j) + 1]);
        for (std::size_t t = b; t < e; ++t) s += col_values_[t];
        sums[static_cast<std::size_t>(j)] = s;
    }
    return sums;
}

double SparseInteractions::value_sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
}

DenseMatrix SparseInteractions::multiply(const DenseMatrix& x) const {
    if (x.rows() != n_cols_)
        throw DataError("multiply: operand has " + std::to_string(x.rows()) +
                        " rows, expected " + std::to_string(n_cols_));
    DenseMatrix y = DenseMatrix::Zero(n_rows_, x.cols());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n_rows_; ++i) {
        auto cols = row_cols(i);
        auto vals = row_values(i);
        for (std::size_t t = 0; t < cols.size(); ++t)
            y.row(i) += vals[t] * x.row(cols[t]);
    }
    return y;
}

DenseMatrix SparseInteractions::multiply_transposed(const DenseMatrix& x) const {
    if (x.rows() != n_rows_)
        throw DataError("multiply_transposed: operand has " + std::to_string(x.rows()) +
                        " rows, expected " + std::to_string(n_rows_));
    DenseMatrix y = DenseMatrix::Zero(n_cols_, x.cols());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t j = 0; j < n_cols_; ++j) {
        const auto b = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j)]);
        const auto e = static_cast<std::size_t>(col_ptr_[static_cast<std::size_t>(j) + 1]);
        for (std::size_t t = b; t < e; ++t)
            y.row(j) += col_values_[t] * x.row(row_idx_[t]);
    }
    return y;
}

DenseMatrix SparseInteractions::to_dense() const {
    DenseMatrix d = DenseMatrix::Zero(n_rows_, n_cols_);
    for (std::int64_t i = 0; i < n_rows_; ++i) {
        auto cols = row_cols(i);
        auto vals = row_values(i);
        for (std::size_t t = 0; t < cols.size(); ++t) d(i, cols[t]) = vals[t];
    }
    return d;
}

std::vector<Entry> SparseInteractions::entries() const {
    std::vector<Entry> out;
    out.reserve(values_.size());
    for (std::int64_t i = 0; i < n_rows_; ++i) {
        auto cols = row_cols(i);
        auto vals = row_values(i);
        for (std::size_t t = 0; t < cols.size(); ++t)
            out.push_back({i, cols[t], vals[t]});
    }
    return out;
}

}  // namespace kronex
