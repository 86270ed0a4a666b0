#pragma once

#include <cstddef>

#include "gfat/matrix.hpp"

namespace gfat {

// Float64 reference implementations used to validate every grid kernel.

// Q * K^T for Q, K of shape n x d_k.
Matrix64 oracle_matmul_qkt(const Matrix64& q, const Matrix64& k);

// Row-wise numerically stable softmax (max subtraction) in float64.
Matrix64 oracle_softmax(const Matrix64& z);

// softmax(Q K^T / sqrt(d_k)) in float64. d_k must match the column count
// of Q and K.
Matrix64 oracle_attention_weights(const Matrix64& q, const Matrix64& k, std::size_t d_k);

// Max elementwise |a - b|; matrices must have equal shape.
double max_abs_diff(const Matrix64& a, const Matrix64& b);

}  // namespace gfat
