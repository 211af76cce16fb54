#include "helprank/numkernel/attention.hpp"

#include <cmath>

#include "helprank/errors.hpp"
#include "helprank/numkernel/ops.hpp"

namespace helprank::numkernel {

Matrix uniform_fan_in(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

AttentionParams::AttentionParams(std::size_t d_in, std::size_t d, Rng& rng)
    : query(uniform_fan_in(d_in, d, rng)),
      key(uniform_fan_in(d_in, d, rng)),
      value(uniform_fan_in(d_in, d, rng)) {}

AttentionResult self_attention_with_weights(Var x, AttentionParams& params) {
  if (x.cols() != params.input_dim()) {
    throw DimensionError("self_attention: input " + x.value().shape_string() +
                         " does not match projection " + params.query.value.shape_string());
  }
  Tape& t = x.tape();
  Var q = matmul(x, t.parameter(params.query));
  Var k = matmul(x, t.parameter(params.key));
  Var v = matmul(x, t.parameter(params.value));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(params.output_dim()));
  Var weights = softmax_row(scale(matmul_nt(q, k), inv_sqrt_d));
  return {matmul(weights, v), weights};
}

Var self_attention(Var x, AttentionParams& params) {
  return self_attention_with_weights(x, params).output;
}

}  // namespace helprank::numkernel
