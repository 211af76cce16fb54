#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "helprank/errors.hpp"
#include "helprank/numkernel/gradcheck.hpp"
#include "helprank/numkernel/ops.hpp"
#include "helprank/regressor/regressor.hpp"

using namespace helprank;
using namespace helprank::regressor;
using numkernel::finite_difference_check;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

void randomize(SoftTree& tree, Rng& rng) {
  for (auto& [name, p] : tree.named_parameters())
    for (double& v : p->value.data()) v = rng.uniform(-1.0, 1.0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Walks every root-to-leaf path, appending leaf probabilities left to right.
std::vector<double> enumerate_routes(const TreeParams& t, const Matrix& z, std::size_t row, std::size_t depth) {
  std::vector<double> out;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t node, std::size_t level, double prob) {
    if (level == depth - 1) {
      out.push_back(prob);
      return;
    }
    double a = t.internal_bias.value(0, node - 1);
    for (std::size_t k = 0; k < z.cols(); ++k) a += z(row, k) * t.internal_weight.value(k, node - 1);
    const double left = sigmoid(a);
    walk(2 * node, level + 1, prob * left);
    walk(2 * node + 1, level + 1, prob * (1.0 - left));
  };
  walk(1, 0, 1.0);
  return out;
}

}  // namespace

TEST_CASE("tree_shape") {
  CHECK(tree_shape(3).internal == 3);
  CHECK(tree_shape(3).leaves == 4);
  CHECK(tree_shape(5).internal == 15);
  CHECK(tree_shape(5).leaves == 16);
  CHECK(tree_shape(2).internal == 1);
  CHECK(tree_shape(2).leaves == 2);
  CHECK_THROWS_AS(tree_shape(1), ConfigError);
  CHECK_THROWS_AS(tree_shape(0), ConfigError);
}

TEST_CASE("path-product routing equals path enumeration") {
  Rng rng(1);
  for (std::size_t depth = 2; depth <= 5; ++depth) {
    SoftTree tree(6, depth, rng);
    randomize(tree, rng);
    Matrix z = random_matrix(7, 6, rng);
    Matrix mu = tree.route_probs(z);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto oracle = enumerate_routes(tree.trees()[0], z, i, depth);
      REQUIRE(oracle.size() == mu.cols());
      double sum = 0.0;
      for (std::size_t l = 0; l < oracle.size(); ++l) {
        CHECK(std::abs(mu(i, l) - oracle[l]) < 1e-12);
        CHECK(mu(i, l) > 0.0);
        CHECK(mu(i, l) < 1.0);
        sum += mu(i, l);
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("worked routing example: right at 1, left at 3, right at 6") {
  Rng rng(2);
  SoftTree tree(4, 4, rng);
  randomize(tree, rng);
  Matrix z = random_matrix(1, 4, rng);
  auto path = leaf_path(4, 5);
  REQUIRE(path.size() == 3);
  CHECK(path[0] == std::make_pair<std::size_t, bool>(1, true));
  CHECK(path[1] == std::make_pair<std::size_t, bool>(3, false));
  CHECK(path[2] == std::make_pair<std::size_t, bool>(6, true));

  Tape t;
  const auto& p = tree.trees()[0];
  Matrix left = numkernel::matmul(z, p.internal_weight.value);
  for (std::size_t k = 0; k < left.cols(); ++k) left(0, k) = sigmoid(left(0, k) + p.internal_bias.value(0, k));
  const double expected = (1.0 - left(0, 0)) * left(0, 2) * (1.0 - left(0, 5));
  CHECK(std::abs(tree.route_probs(z)(0, 5) - expected) < 1e-15);
}

TEST_CASE("saturated and uniform routing") {
  Rng rng(3);
  SoftTree tree(5, 4, rng);
  auto& p = tree.trees()[0];
  p.internal_weight.value.fill(0.0);
  p.internal_bias.value.fill(50.0);
  Matrix z = random_matrix(3, 5, rng);
  Matrix mu = tree.route_probs(z);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(mu(i, 0) == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t l = 1; l < mu.cols(); ++l) CHECK(mu(i, l) < 1e-20);
  }

  p.internal_bias.value.fill(0.0);
  mu = tree.route_probs(z);
  for (double v : mu.data()) CHECK(v == 0.125);
  Matrix s = tree.leaf_scores(Tape().constant(z)).value();
  Matrix f = tree.predict(z);
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (std::size_t l = 0; l < s.cols(); ++l) mean += s(i, l) / 8.0;
    CHECK(std::abs(f(i, 0) - mean) < 1e-12);
  }
}

TEST_CASE("leaf scores are affine in z") {
  Rng rng(4);
  SoftTree tree(3, 3, rng);
  randomize(tree, rng);
  Tape t;
  CHECK(tree.leaf_scores(t.constant(Matrix(1, 3))).value() == tree.trees()[0].leaf_bias.value);
  Matrix a = random_matrix(1, 3, rng), b = random_matrix(1, 3, rng);
  Matrix sum = a;
  numkernel::axpy(1.0, b, sum);
  Matrix sa = tree.leaf_scores(t.constant(a)).value(), sb = tree.leaf_scores(t.constant(b)).value();
  Matrix ss = tree.leaf_scores(t.constant(sum)).value();
  for (std::size_t l = 0; l < ss.cols(); ++l)
    CHECK(std::abs(ss(0, l) - (sa(0, l) + sb(0, l) - tree.trees()[0].leaf_bias.value(0, l))) < 1e-12);
}

TEST_CASE("identical leaves make routing irrelevant") {
  Rng rng(5);
  SoftTree tree(4, 3, rng);
  randomize(tree, rng);
  auto& p = tree.trees()[0];
  for (std::size_t l = 1; l < 4; ++l) {
    for (std::size_t k = 0; k < 4; ++k) p.leaf_weight.value(k, l) = p.leaf_weight.value(k, 0);
    p.leaf_bias.value(0, l) = p.leaf_bias.value(0, 0);
  }
  Matrix z = random_matrix(6, 4, rng);
  Matrix f = tree.predict(z);
  Matrix s = numkernel::matmul(z, p.leaf_weight.value);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(f(i, 0) - (s(i, 0) + p.leaf_bias.value(0, 0))) < 1e-12);
}

TEST_CASE("prediction lies between the extreme leaf scores") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    SoftTree tree(5, 2 + static_cast<std::size_t>(trial % 4), rng);
    randomize(tree, rng);
    Matrix z = random_matrix(4, 5, rng, 3.0);
    Tape t;
    Matrix s = tree.leaf_scores(t.constant(z)).value();
    Matrix f = tree.predict(z);
    for (std::size_t i = 0; i < 4; ++i) {
      auto row = s.row(i);
      CHECK(f(i, 0) >= *std::min_element(row.begin(), row.end()) - 1e-12);
      CHECK(f(i, 0) <= *std::max_element(row.begin(), row.end()) + 1e-12);
    }
  }
}

TEST_CASE("routing op gradient") {
  Rng rng(7);
  for (std::size_t depth : {2u, 3u, 5u}) {
    Matrix p(3, tree_shape(depth).internal);
    for (double& v : p.data()) v = rng.uniform(0.05, 0.95);
    auto report = finite_difference_check(
        [depth](Tape&, std::span<const Var> in) { return route_from_left_probs(in[0], depth); }, {p}, 1e-6);
    CHECK(report.passed);
  }
}

TEST_CASE("tree gradients w.r.t. z and parameters") {
  Rng rng(8);
  SoftTree tree(5, 4, rng, 2);
  randomize(tree, rng);
  Matrix z = random_matrix(3, 5, rng);
  auto wrt_z = finite_difference_check([&](Tape&, std::span<const Var> in) { return tree.score(in[0]); }, {z}, 1e-4);
  CHECK(wrt_z.passed);
  std::vector<Parameter*> params;
  for (auto& [name, p] : tree.named_parameters()) params.push_back(p);
  auto wrt_params = finite_difference_check([&](Tape& t) { return tree.score(t.constant(z)); }, params, 1e-4);
  CHECK(wrt_params.passed);
  auto leaves = finite_difference_check(
      [&](Tape& t) { return tree.leaf_scores(t.constant(z), 1); },
      {&tree.trees()[1].leaf_weight, &tree.trees()[1].leaf_bias}, 1e-6);
  CHECK(leaves.passed);
}

TEST_CASE("tree rejects mismatched inputs") {
  Rng rng(9);
  SoftTree tree(5, 3, rng);
  Tape t;
  CHECK_THROWS_AS(tree.score(t.constant(Matrix(2, 4))), DimensionError);
  CHECK_THROWS_AS(tree.route_probs(Matrix(1, 6)), DimensionError);
  CHECK_THROWS_AS(SoftTree(5, 1, rng), ConfigError);
  CHECK_THROWS_AS(route_from_left_probs(t.constant(Matrix(1, 2)), 3), DimensionError);
}

TEST_CASE("ensemble adds tree scores") {
  Rng rng(10);
  SoftTree pair(4, 3, rng, 2);
  randomize(pair, rng);
  Matrix z = random_matrix(2, 4, rng);
  Tape t;
  Var zv = t.constant(z);
  Matrix expected(2, 1);
  for (std::size_t k = 0; k < 2; ++k) {
    Matrix f = numkernel::row_sum(numkernel::hadamard(pair.route_probs(zv, k), pair.leaf_scores(zv, k))).value();
    numkernel::axpy(1.0, f, expected);
  }
  CHECK(numkernel::max_abs_diff(pair.predict(z), expected) < 1e-12);
}

TEST_CASE("fcnn") {
  Rng rng(11);
  Fcnn net({6, 8, 4, 2, 1}, rng);
  for (auto& [name, p] : net.named_parameters()) p->value.fill(0.0);
  Matrix z = random_matrix(3, 6, rng);
  CHECK(net.predict(z) == Matrix(3, 1));

  Fcnn linear({6, 1}, rng);
  Matrix f = linear.predict(z);
  Matrix expected = numkernel::matmul(z, linear.layers()[0].first.value);
  CHECK(numkernel::max_abs_diff(f, expected) < 1e-15);

  Fcnn deep({6, 8, 4, 2, 1}, rng);
  for (auto& [name, p] : deep.named_parameters())
    for (double& v : p->value.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<Parameter*> params;
  for (auto& [name, p] : deep.named_parameters()) params.push_back(p);
  CHECK(finite_difference_check([&](Tape& t) { return deep.score(t.constant(z)); }, params, 1e-4).passed);
  CHECK(finite_difference_check([&](Tape&, std::span<const Var> in) { return deep.score(in[0]); }, {z}, 1e-4).passed);

  CHECK_THROWS_AS(Fcnn({6, 2}, rng), ConfigError);
  CHECK_THROWS_AS(Fcnn({6}, rng), ConfigError);
  Tape t;
  CHECK_THROWS_AS(deep.score(t.constant(Matrix(1, 5))), DimensionError);
}
