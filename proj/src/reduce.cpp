#include "kronex/reduce.hpp"

#include <string>

#include "kronex/error.hpp"
#include "kronex/orthogonalize.hpp"
#include "kronex/resize.hpp"

namespace kronex {

ReduceResult reduce_full(const SparseInteractions& r, std::int64_t out_rows,
                         std::int64_t out_cols, const SvdOptions& svd) {
    const std::int64_t m = r.n_rows();
    const std::int64_t n = r.n_cols();
    if (out_rows < 1 || out_cols < 1)
        throw std::invalid_argument("reduce: output dims must be >= 1");
    if (out_rows * 4 > m || out_cols * 4 > n)
        throw std::invalid_argument(
            "reduce: target " + std::to_string(out_rows) + "x" + std::to_string(out_cols) +
            " violates the reduction-ratio bound (need out_rows <= rows/4 and "
            "out_cols <= cols/4 of " + std::to_string(m) + "x" + std::to_string(n) + ")");

    const std::int64_t k = std::min(out_rows, out_cols);
    SvdTriplet svd_result = truncated_svd(r, k, svd);

    DenseMatrix u_bar = resize_average(svd_result.u, out_rows, k);
    DenseMatrix v_bar = resize_average(svd_result.v, k, out_cols);

    DenseMatrix u_tilde, v_tilde;
    try {
        u_tilde = orthogonalize_columns(u_bar);
        v_tilde = orthogonalize_rows(v_bar);
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) +
                        " (resized singular-vector factor lost rank; try a smaller k "
                        "or larger output dims)");
    }

    ReduceResult out;
    out.sigma = svd_result.sigma;
    out.u_tilde = u_tilde;
    out.v_tilde = v_tilde;
    out.pre_rescale = DenseMatrix(u_tilde * out.sigma.asDiagonal() * v_tilde);

    const double lo = out.pre_rescale.minCoeff();
    const double hi = out.pre_rescale.maxCoeff();
    if (hi == lo)
        throw DataError("reduce: degenerate reconstruction (max == min == " +
                        std::to_string(hi) + ")");
    // Dividing by (max - min) keeps values in [-1, 1] only when the data
    // straddles zero, which centering guarantees; anything else is an error,
    // not something to shift silently.
    if (lo > 0.0 || hi < 0.0)
        throw DataError("reduce: reconstruction does not straddle zero (min " +
                        std::to_string(lo) + ", max " + std::to_string(hi) +
                        "); input does not look centered");

    out.reduced.matrix = out.pre_rescale / (hi - lo);
    out.reduced.k = k;
    out.reduced.source_rows = m;
    out.reduced.source_cols = n;
    out.reduced.rescale_min = lo;
    out.reduced.rescale_max = hi;
    return out;
}

ReducedMatrix reduce(const SparseInteractions& r, std::int64_t out_rows,
                     std::int64_t out_cols, const SvdOptions& svd) {
    return reduce_full(r, out_rows, out_cols, svd).reduced;
}

}  // namespace kronex
