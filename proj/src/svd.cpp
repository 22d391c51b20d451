#include "kronex/svd.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "kronex/error.hpp"
#include "kronex/rng.hpp"

namespace kronex {

namespace {

// Thin orthonormal basis of the columns of y.
Eigen::MatrixXd thin_q(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

struct RitzFactors {
    Eigen::MatrixXd u;  // m x b
    Eigen::VectorXd sigma;
    Eigen::MatrixXd vt;  // b x n (rows are right singular vectors)
};

// Rayleigh-Ritz on the current basis q: SVD of B = q^T M via a tall QR of
// B^T and a small square SVD.
RitzFactors ritz(const SparseInteractions& m, const Eigen::MatrixXd& q) {
    DenseMatrix qt_rm = q;  // row-major copy for the sparse kernel
    Eigen::MatrixXd bt = m.multiply_transposed(qt_rm);  // n x b
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(bt);
    const auto b = bt.cols();
    Eigen::MatrixXd q2 = qr.householderQ() * Eigen::MatrixXd::Identity(bt.rows(), b);
    Eigen::MatrixXd r2 = qr.matrixQR().topRows(b).triangularView<Eigen::Upper>();
    // B = r2^T q2^T; SVD of the small square factor gives the rest.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r2.transpose(),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    RitzFactors f;
    f.u = q * svd.matrixU();
    f.sigma = svd.singularValues();
    f.vt = (q2 * svd.matrixV()).transpose();
    return f;
}

}  // namespace

SvdTriplet truncated_svd(const SparseInteractions& m, std::int64_t k,
                         const SvdOptions& opts) {
    const std::int64_t rows = m.n_rows();
    const std::int64_t cols = m.n_cols();
    const std::int64_t mindim = std::min(rows, cols);
    if (k < 1 || k > mindim)
        throw std::invalid_argument("svd rank k=" + std::to_string(k) +
                                    " out of range [1, " + std::to_string(mindim) + "]");
    if (opts.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (opts.check_every < 1) throw std::invalid_argument("check_every must be >= 1");

    const std::int64_t b = std::min<std::int64_t>(k + std::max(opts.oversample, 0), mindim);

    SplitMix64 rng(mix64(opts.seed));
    DenseMatrix omega(cols, b);
    for (std::int64_t i = 0; i < cols; ++i)
        for (std::int64_t j = 0; j < b; ++j) omega(i, j) = rng.next_gaussian();

    Eigen::MatrixXd q = thin_q(m.multiply(omega));

    RitzFactors f;
    double worst = 0.0;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        Eigen::MatrixXd z = thin_q(m.multiply_transposed(DenseMatrix(q)));
        q = thin_q(m.multiply(DenseMatrix(z)));

        const bool last = iter + 1 == opts.max_iter;
        if ((iter + 1) % opts.check_every != 0 && !last) continue;

        f = ritz(m, q);
        const double s0 = f.sigma(0);
        if (s0 == 0.0) break;  // zero matrix: residuals are trivially zero

        // Residuals ||M v_i - sigma_i u_i|| for the k leading pairs.
        DenseMatrix vk = f.vt.topRows(k).transpose();  // n x k
        Eigen::MatrixXd mv = m.multiply(vk);
        worst = 0.0;
        for (std::int64_t i = 0; i < k; ++i)
            worst = std::max(worst, (mv.col(i) - f.sigma(i) * f.u.col(i)).norm());
        if (worst <= opts.tol * s0) break;
        if (last) {
            std::ostringstream msg;
            msg << "svd did not converge in " << opts.max_iter
                << " iterations; worst residual " << worst << " vs target "
                << opts.tol * s0;
            throw ConvergenceError(msg.str());
        }
    }

    SvdTriplet out;
    out.u = f.u.leftCols(k);
    out.sigma = f.sigma.head(k);
    out.v = f.vt.topRows(k);

    // Sign convention: largest-magnitude entry of each u column positive.
    for (std::int64_t i = 0; i < k; ++i) {
        std::int64_t arg = 0;
        double best = -1.0;
        for (std::int64_t r = 0; r < rows; ++r) {
            const double a = std::abs(out.u(r, i));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (out.u(arg, i) < 0.0) {
            out.u.col(i) = -out.u.col(i);
            out.v.row(i) = -out.v.row(i);
        }
    }

    const double floor = 1e-12 * (out.sigma.size() > 0 ? out.sigma(0) : 0.0);
    for (std::int64_t i = 0; i < k; ++i)
        if (out.sigma(i) <= floor) ++out.degenerate_rank;

    return out;
}

std::vector<double> singular_values(const DenseMatrix& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(a)};
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

}  // namespace kronex
