#pragma once

#include <cstddef>

#include "helprank/numkernel/rng.hpp"
#include "helprank/numkernel/tape.hpp"

namespace helprank::numkernel {

/// Weights uniform on (-1/sqrt(rows), 1/sqrt(rows)); rows is the fan-in.
Matrix uniform_fan_in(std::size_t rows, std::size_t cols, Rng& rng);

/// Single-head scaled dot-product attention: query/key/value projections
/// from d_in to d, no bias, no residual, no normalisation.
struct AttentionParams {
  Parameter query;
  Parameter key;
  Parameter value;

  AttentionParams() = default;
  AttentionParams(std::size_t d_in, std::size_t d, Rng& rng);

  std::size_t input_dim() const { return query.value.rows(); }
  std::size_t output_dim() const { return query.value.cols(); }
};

struct AttentionResult {
  Var output;   // (n x d)
  Var weights;  // (n x n), rows sum to 1
};

/// softmax(Q K^T / sqrt(d)) V with Q = xWq, K = xWk, V = xWv.
AttentionResult self_attention_with_weights(Var x, AttentionParams& params);
Var self_attention(Var x, AttentionParams& params);

}  // namespace helprank::numkernel
