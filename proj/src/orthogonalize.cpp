#include "kronex/orthogonalize.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "kronex/error.hpp"

namespace kronex {

namespace {
constexpr double kRankEps = 1e-10;  // relative eigenvalue floor
}

DenseMatrix inv_sqrt_psd(const DenseMatrix& s) {
    if (s.rows() != s.cols())
        throw std::invalid_argument("inv_sqrt_psd: matrix must be square");
    const double scale = std::max(1.0, max_abs(s));
    if (max_abs_diff(s, DenseMatrix(s.transpose())) > 1e-10 * scale)
        throw DataError("inv_sqrt_psd: matrix is not symmetric");

    Eigen::MatrixXd sym = 0.5 * (Eigen::MatrixXd(s) + Eigen::MatrixXd(s).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw DataError("inv_sqrt_psd: eigendecomposition failed");

    const auto& lam = eig.eigenvalues();
    const double lmax = lam(lam.size() - 1);
    const double floor = kRankEps * lmax;
    if (lmax <= 0.0 || lam(0) <= floor)
        throw DataError("inv_sqrt_psd: eigenvalue " + std::to_string(lam(0)) +
                        " at or below rank threshold " + std::to_string(floor));

    Eigen::VectorXd inv_sqrt = lam.array().rsqrt();
    Eigen::MatrixXd x =
        eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
    return DenseMatrix(x);
}

DenseMatrix orthogonalize_columns(const DenseMatrix& a) {
    if (a.rows() < a.cols())
        throw std::invalid_argument("orthogonalize_columns: need n_rows >= n_cols");
    DenseMatrix gram = DenseMatrix(a.transpose() * a);
    return DenseMatrix(a * inv_sqrt_psd(gram));
}

DenseMatrix orthogonalize_rows(const DenseMatrix& a) {
    if (a.cols() < a.rows())
        throw std::invalid_argument("orthogonalize_rows: need n_cols >= n_rows");
    DenseMatrix gram = DenseMatrix(a * a.transpose());
    return DenseMatrix(inv_sqrt_psd(gram) * a);
}

}  // namespace kronex
