#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "helprank/numkernel/matrix.hpp"
#include "helprank/numkernel/rng.hpp"
#include "helprank/numkernel/tape.hpp"

namespace helprank::regressor {

using numkernel::Matrix;
using numkernel::Parameter;
using numkernel::Rng;
using numkernel::Tape;
using numkernel::Var;

struct TreeShape {
  std::size_t internal;  // 2^(depth-1) - 1
  std::size_t leaves;    // 2^(depth-1)
};

/// Throws ConfigError for depth < 2.
TreeShape tree_shape(std::size_t depth);

/// Heap-ordered internal nodes (1-based, children of n are 2n and 2n+1)
/// visited on the way to leaf `leaf` (0-based, left to right), together
/// with the branch taken at each (false = left, true = right).
std::vector<std::pair<std::size_t, bool>> leaf_path(std::size_t depth, std::size_t leaf);

/// mu from left-branch probabilities (n x |N|, column k is node k+1):
/// mu_l = product of the branch probabilities along the path of leaf l.
Var route_from_left_probs(Var p_left, std::size_t depth);

/// Scores rows of z (n x input_dim) into (n x 1).
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual Var score(Var z) = 0;
  virtual std::vector<std::pair<std::string, Parameter*>> named_parameters() = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::string describe() const = 0;
};

struct TreeParams {
  Parameter internal_weight;  // (input_dim x |N|)
  Parameter internal_bias;    // (1 x |N|)
  Parameter leaf_weight;      // (input_dim x |L|)
  Parameter leaf_bias;        // (1 x |L|)
};

/// Soft decision tree; with ensemble > 1 the score is a sum of trees.
class SoftTree : public Scorer {
 public:
  SoftTree(std::size_t input_dim, std::size_t depth, Rng& rng, std::size_t ensemble = 1);

  std::size_t depth() const { return depth_; }
  TreeShape shape() const { return tree_shape(depth_); }
  std::size_t input_dim() const override { return input_dim_; }
  std::vector<TreeParams>& trees() { return trees_; }
  const std::vector<TreeParams>& trees() const { return trees_; }

  /// (n x |L|) routing probabilities of tree k.
  Var route_probs(Var z, std::size_t k = 0);
  /// (n x |L|) per-leaf linear scores of tree k.
  Var leaf_scores(Var z, std::size_t k = 0);
  /// (n x 1) sum over trees of sum_l mu_l s_l.
  Var score(Var z) override;

  /// Plain-matrix forms for inspection.
  Matrix route_probs(const Matrix& z, std::size_t k = 0);
  Matrix predict(const Matrix& z);

  std::vector<std::pair<std::string, Parameter*>> named_parameters() override;
  std::string describe() const override;

 private:
  void require_input(Var z) const;

  std::size_t input_dim_;
  std::size_t depth_;
  std::vector<TreeParams> trees_;
};

/// Widths such as {5d, 8, 4, 2, 1}: affine layers with tanh between them.
class Fcnn : public Scorer {
 public:
  Fcnn(std::vector<std::size_t> widths, Rng& rng);

  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t input_dim() const override { return widths_.front(); }
  std::vector<std::pair<Parameter, Parameter>>& layers() { return layers_; }

  Var score(Var z) override;
  Matrix predict(const Matrix& z);

  std::vector<std::pair<std::string, Parameter*>> named_parameters() override;
  std::string describe() const override;

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::pair<Parameter, Parameter>> layers_;  // (weight, bias)
};

}  // namespace helprank::regressor
