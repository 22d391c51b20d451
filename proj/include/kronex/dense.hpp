#pragma once

#include <Eigen/Dense>

namespace kronex {

// Row-major to match the on-disk layout of persisted matrices.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline double max_abs(const DenseMatrix& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

// ||a - b||_max; shapes must agree.
inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    return max_abs(a - b);
}

}  // namespace kronex
