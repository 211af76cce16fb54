#include "helprank/regressor/regressor.hpp"

#include "helprank/errors.hpp"
#include "helprank/numkernel/attention.hpp"
#include "helprank/numkernel/ops.hpp"

namespace helprank::regressor {

namespace nk = numkernel;

TreeShape tree_shape(std::size_t depth) {
  if (depth < 2) throw ConfigError("tree depth must be at least 2, got " + std::to_string(depth));
  if (depth > 20) throw ConfigError("tree depth " + std::to_string(depth) + " is too large");
  const std::size_t leaves = std::size_t{1} << (depth - 1);
  return {leaves - 1, leaves};
}

std::vector<std::pair<std::size_t, bool>> leaf_path(std::size_t depth, std::size_t leaf) {
  const TreeShape s = tree_shape(depth);
  if (leaf >= s.leaves) throw DimensionError("leaf index out of range");
  std::vector<std::pair<std::size_t, bool>> path;
  std::size_t node = 1;
  for (std::size_t level = depth - 1; level-- > 0;) {
    const bool right = (leaf >> level) & 1U;
    path.emplace_back(node, right);
    node = 2 * node + (right ? 1 : 0);
  }
  return path;
}

namespace {

double branch_prob(const Matrix& p, std::size_t i, const std::pair<std::size_t, bool>& step) {
  const double left = p(i, step.first - 1);
  return step.second ? 1.0 - left : left;
}

}  // namespace

Var route_from_left_probs(Var p_left, std::size_t depth) {
  const TreeShape s = tree_shape(depth);
  if (p_left.cols() != s.internal) {
    throw DimensionError("route: expected " + std::to_string(s.internal) + " node probabilities, got " +
                         p_left.value().shape_string());
  }
  std::vector<std::vector<std::pair<std::size_t, bool>>> paths;
  for (std::size_t l = 0; l < s.leaves; ++l) paths.push_back(leaf_path(depth, l));

  const Matrix& p = p_left.value();
  const std::size_t n = p.rows();
  Matrix mu(n, s.leaves);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < s.leaves; ++l) {
      double prod = 1.0;
      for (const auto& step : paths[l]) prod *= branch_prob(p, i, step);
      mu(i, l) = prod;
    }
  }

  return p_left.tape().record(std::move(mu), {p_left}, [p_left, paths, depth](Tape& t, std::size_t id) {
    Matrix* gp = t.grad_target(p_left);
    if (gp == nullptr) return;
    const Matrix& p = t.value(p_left);
    const Matrix& g = t.grad(id);
    const std::size_t levels = depth - 1;
    std::vector<double> prefix(levels + 1), suffix(levels + 1);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t l = 0; l < paths.size(); ++l) {
        const auto& path = paths[l];
        // Product of all factors but one, without dividing.
        prefix[0] = 1.0;
        for (std::size_t k = 0; k < levels; ++k) prefix[k + 1] = prefix[k] * branch_prob(p, i, path[k]);
        suffix[levels] = 1.0;
        for (std::size_t k = levels; k-- > 0;) suffix[k] = suffix[k + 1] * branch_prob(p, i, path[k]);
        for (std::size_t k = 0; k < levels; ++k) {
          const double others = prefix[k] * suffix[k + 1];
          (*gp)(i, path[k].first - 1) += g(i, l) * others * (path[k].second ? -1.0 : 1.0);
        }
      }
    }
  });
}

SoftTree::SoftTree(std::size_t input_dim, std::size_t depth, Rng& rng, std::size_t ensemble)
    : input_dim_(input_dim), depth_(depth) {
  if (input_dim < 1) throw ConfigError("tree input dimension must be positive");
  if (ensemble < 1) throw ConfigError("tree ensemble size must be at least 1");
  const TreeShape s = tree_shape(depth);
  for (std::size_t k = 0; k < ensemble; ++k) {
    TreeParams t;
    t.internal_weight = Parameter(nk::uniform_fan_in(input_dim, s.internal, rng));
    t.internal_bias = Parameter(Matrix(1, s.internal));
    t.leaf_weight = Parameter(nk::uniform_fan_in(input_dim, s.leaves, rng));
    t.leaf_bias = Parameter(Matrix(1, s.leaves));
    trees_.push_back(std::move(t));
  }
}

void SoftTree::require_input(Var z) const {
  if (z.cols() != input_dim_) {
    throw DimensionError("soft tree: expected rows of width " + std::to_string(input_dim_) + ", got " +
                         z.value().shape_string());
  }
}

Var SoftTree::route_probs(Var z, std::size_t k) {
  require_input(z);
  Tape& t = z.tape();
  TreeParams& p = trees_.at(k);
  Var left = nk::sigmoid(nk::affine(z, t.parameter(p.internal_weight), t.parameter(p.internal_bias)));
  return route_from_left_probs(left, depth_);
}

Var SoftTree::leaf_scores(Var z, std::size_t k) {
  require_input(z);
  Tape& t = z.tape();
  TreeParams& p = trees_.at(k);
  return nk::affine(z, t.parameter(p.leaf_weight), t.parameter(p.leaf_bias));
}

Var SoftTree::score(Var z) {
  Var total;
  for (std::size_t k = 0; k < trees_.size(); ++k) {
    Var f = nk::row_sum(nk::hadamard(route_probs(z, k), leaf_scores(z, k)));
    total = k == 0 ? f : nk::add(total, f);
  }
  return total;
}

Matrix SoftTree::route_probs(const Matrix& z, std::size_t k) {
  Tape t;
  return route_probs(t.constant(z), k).value();
}

Matrix SoftTree::predict(const Matrix& z) {
  Tape t;
  return score(t.constant(z)).value();
}

std::vector<std::pair<std::string, Parameter*>> SoftTree::named_parameters() {
  std::vector<std::pair<std::string, Parameter*>> out;
  for (std::size_t k = 0; k < trees_.size(); ++k) {
    const std::string prefix = "tree" + std::to_string(k) + ".";
    out.emplace_back(prefix + "internal_weight", &trees_[k].internal_weight);
    out.emplace_back(prefix + "internal_bias", &trees_[k].internal_bias);
    out.emplace_back(prefix + "leaf_weight", &trees_[k].leaf_weight);
    out.emplace_back(prefix + "leaf_bias", &trees_[k].leaf_bias);
  }
  return out;
}

std::string SoftTree::describe() const {
  std::string s = "soft tree, depth " + std::to_string(depth_);
  if (trees_.size() > 1) s += ", " + std::to_string(trees_.size()) + " trees";
  return s;
}

Fcnn::Fcnn(std::vector<std::size_t> widths, Rng& rng) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("fcnn needs at least an input and an output width");
  if (widths_.back() != 1) throw ConfigError("fcnn output width must be 1");
  for (std::size_t w : widths_) {
    if (w < 1) throw ConfigError("fcnn widths must be positive");
  }
  for (std::size_t k = 0; k + 1 < widths_.size(); ++k) {
    layers_.emplace_back(Parameter(nk::uniform_fan_in(widths_[k], widths_[k + 1], rng)),
                         Parameter(Matrix(1, widths_[k + 1])));
  }
}

Var Fcnn::score(Var z) {
  if (z.cols() != widths_.front()) {
    throw DimensionError("fcnn: expected rows of width " + std::to_string(widths_.front()) + ", got " +
                         z.value().shape_string());
  }
  Tape& t = z.tape();
  Var h = z;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    h = nk::affine(h, t.parameter(layers_[k].first), t.parameter(layers_[k].second));
    if (k + 1 < layers_.size()) h = nk::tanh(h);
  }
  return h;
}

Matrix Fcnn::predict(const Matrix& z) {
  Tape t;
  return score(t.constant(z)).value();
}

std::vector<std::pair<std::string, Parameter*>> Fcnn::named_parameters() {
  std::vector<std::pair<std::string, Parameter*>> out;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    out.emplace_back("fcnn.layer" + std::to_string(k) + ".weight", &layers_[k].first);
    out.emplace_back("fcnn.layer" + std::to_string(k) + ".bias", &layers_[k].second);
  }
  return out;
}

std::string Fcnn::describe() const {
  std::string s = "fcnn ";
  for (std::size_t k = 0; k < widths_.size(); ++k) s += (k ? "-" : "") + std::to_string(widths_[k]);
  return s;
}

}  // namespace helprank::regressor
