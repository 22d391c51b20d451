#pragma once

#include <cstdint>

#include "kronex/dense.hpp"

namespace kronex {

// Area-weighted box average: output cell (I, J) is the mean of the input over
// the rectangle [I*m/out_rows, (I+1)*m/out_rows) x [J*n/out_cols,
// (J+1)*n/out_cols), fractional boundary cells weighted by overlap area.
// Downscaling only; constant inputs map to the same constant.
DenseMatrix resize_average(const DenseMatrix& in, std::int64_t out_rows,
                           std::int64_t out_cols);

}  // namespace kronex
