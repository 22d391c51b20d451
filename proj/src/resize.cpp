#include "kronex/resize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kronex {

DenseMatrix resize_average(const DenseMatrix& in, std::int64_t out_rows,
                           std::int64_t out_cols) {
    const std::int64_t m = in.rows();
    const std::int64_t n = in.cols();
    if (out_rows < 1 || out_cols < 1)
        throw std::invalid_argument("resize_average: output dims must be >= 1");
    if (out_rows > m || out_cols > n)
        throw std::invalid_argument("resize_average: upscaling requested (" +
                                    std::to_string(out_rows) + "x" +
                                    std::to_string(out_cols) + " from " +
                                    std::to_string(m) + "x" + std::to_string(n) + ")");

    const double sr = static_cast<double>(m) / static_cast<double>(out_rows);
    const double sc = static_cast<double>(n) / static_cast<double>(out_cols);

    DenseMatrix out(out_rows, out_cols);
    for (std::int64_t oi = 0; oi < out_rows; ++oi) {
        const double r0 = static_cast<double>(oi) * sr;
        const double r1 = static_cast<double>(oi + 1) * sr;
        const std::int64_t ri0 = static_cast<std::int64_t>(std::floor(r0));
        const std::int64_t ri1 = std::min<std::int64_t>(
            m - 1, static_cast<std::int64_t>(std::ceil(r1)) - 1);
        for (std::int64_t oj = 0; oj < out_cols; ++oj) {
            const double c0 = static_cast<double>(oj) * sc;
            const double c1 = static_cast<double>(oj + 1) * sc;
            const std::int64_t ci0 = static_cast<std::int64_t>(std::floor(c0));
            const std::int64_t ci1 = std::min<std::int64_t>(
                n - 1, static_cast<std::int64_t>(std::ceil(c1)) - 1);

            double acc = 0.0;
            double area = 0.0;
            for (std::int64_t i = ri0; i <= ri1; ++i) {
                const double wr = std::min(r1, static_cast<double>(i + 1)) -
                                  std::max(r0, static_cast<double>(i));
                if (wr <= 0.0) continue;
                for (std::int64_t j = ci0; j <= ci1; ++j) {
                    const double wc = std::min(c1, static_cast<double>(j + 1)) -
                                      std::max(c0, static_cast<double>(j));
                    if (wc <= 0.0) continue;
                    acc += wr * wc * in(i, j);
                    area += wr * wc;
                }
            }
            out(oi, oj) = acc / area;
        }
    }
    return out;
}

}  // namespace kronex
