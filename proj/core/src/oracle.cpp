#include "gfat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfat/errors.hpp"

namespace gfat {

Matrix64 oracle_matmul_qkt(const Matrix64& q, const Matrix64& k) {
    if (q.cols() != k.cols()) {
        throw DimensionError("Q and K must share d_k: " + std::to_string(q.cols()) + " vs " +
                             std::to_string(k.cols()));
    }
    const std::size_t n = q.rows();
    const std::size_t m = k.rows();
    const std::size_t d = q.cols();
    Matrix64 s(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < d; ++t) acc += q.at(i, t) * k.at(j, t);
            s.at(i, j) = acc;
        }
    }
    return s;
}

Matrix64 oracle_softmax(const Matrix64& z) {
    Matrix64 out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double row_max = z.at(i, 0);
        for (std::size_t j = 1; j < z.cols(); ++j) row_max = std::max(row_max, z.at(i, j));
        double row_sum = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) {
            const double e = std::exp(z.at(i, j) - row_max);
            out.at(i, j) = e;
            row_sum += e;
        }
        for (std::size_t j = 0; j < z.cols(); ++j) out.at(i, j) /= row_sum;
    }
    return out;
}

Matrix64 oracle_attention_weights(const Matrix64& q, const Matrix64& k, std::size_t d_k) {
    if (q.cols() != d_k || k.cols() != d_k) {
        throw DimensionError("Q/K column count does not match d_k = " + std::to_string(d_k));
    }
    Matrix64 scores = oracle_matmul_qkt(q, k);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k));
    for (double& v : scores.data()) v *= inv_sqrt_dk;
    return oracle_softmax(scores);
}

double max_abs_diff(const Matrix64& a, const Matrix64& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("shape mismatch in max_abs_diff");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

}  // namespace gfat
