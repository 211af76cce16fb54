#pragma once

#include <cstddef>
#include <vector>

#include "helprank/numkernel/matrix.hpp"
#include "helprank/numkernel/tape.hpp"

// Differentiable operations recorded on a Tape. Every op checks shapes
// and throws DimensionError naming the offending shapes.
namespace helprank::numkernel {

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
/// Adds a (1 x c) row to every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);

Var sigmoid(Var x);
Var tanh(Var x);
Var softmax_row(Var x);

Var concat_cols(Var a, Var b);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(Var a, Var b);
Var concat_rows(const std::vector<Var>& parts);

/// Column-wise mean, (n x c) -> (1 x c).
Var mean_pool_rows(Var x);
/// Column-wise max; gradient routed to the first maximal row.
Var max_pool_rows(Var x);

/// (n x c) -> (n x kernel*c): row t holds rows t-pad .. t+pad of x,
/// zero where out of range. kernel must be odd.
Var im2col_same(Var x, std::size_t kernel);
/// Same-length 1-D convolution over rows with zero padding.
/// filters: (kernel*c_in x c_out), bias: (1 x c_out).
Var conv1d(Var x, Var filters, Var bias, std::size_t kernel);

/// x * w + b with b broadcast over rows.
Var affine(Var x, Var w, Var b);

/// (n x c) -> (n x 1)
Var row_sum(Var x);
/// -> (1 x 1)
Var sum_all(Var x);
/// sum(w .* x) -> (1 x 1); w is a constant weighting.
Var weighted_sum(Var x, const Matrix& w);

double sigmoid(double x);

}  // namespace helprank::numkernel
