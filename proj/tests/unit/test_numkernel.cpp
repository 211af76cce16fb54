#include <doctest.h>

#include <cmath>
#include <set>

#include "helprank/errors.hpp"
#include "helprank/numkernel/attention.hpp"
#include "helprank/numkernel/gradcheck.hpp"
#include "helprank/numkernel/matrix.hpp"
#include "helprank/numkernel/ops.hpp"
#include "helprank/numkernel/rng.hpp"

using namespace helprank;
using namespace helprank::numkernel;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST_CASE("matmul by identity and by hand") {
  Matrix a{{1, 2}, {3, 4}};
  CHECK(matmul(Matrix::identity(2), a) == a);
  Matrix b{{0}, {1}};
  CHECK(matmul(a, b) == Matrix{{2}, {4}});
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Matrix a(2, 3), b(2, 2);
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2x3)") != std::string::npos);
    CHECK(msg.find("(2x2)") != std::string::npos);
  }
}

TEST_CASE("matmul gradient of summed output matches central differences") {
  Rng rng(11);
  GradCheckOptions opt;
  opt.reduction = Reduction::kSum;
  auto report = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return matmul(in[0], in[1]); },
      {random_matrix(3, 4, rng), random_matrix(4, 2, rng)}, 1e-6, opt);
  CHECK(report.passed);
  CHECK(report.entries == 20);
  // Linear in each operand: only rounding remains.
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("matmul_nt gradient") {
  Rng rng(12);
  auto report = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return matmul_nt(in[0], in[1]); },
      {random_matrix(3, 4, rng), random_matrix(5, 4, rng)}, 1e-6);
  CHECK(report.passed);
}

TEST_CASE("softmax_row values") {
  Matrix s = softmax_row(Matrix{{0, 0, 0}});
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Matrix two = softmax_row(Matrix{{4, 0}});
  const double e4 = std::exp(4.0);
  CHECK(std::abs(two(0, 0) - e4 / (e4 + 1.0)) < 1e-15);
  CHECK(std::abs(two(0, 1) - 1.0 / (e4 + 1.0)) < 1e-15);

  Matrix big = softmax_row(Matrix{{1000, 0}});
  CHECK(big.all_finite());
  CHECK(big(0, 0) == doctest::Approx(1.0));
  CHECK(big(0, 1) < 1e-300);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix s = softmax_row(random_matrix(4, 7, rng, 20.0));
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("softmax_row gradient") {
  Rng rng(5);
  auto report = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return softmax_row(in[0]); },
      {random_matrix(3, 5, rng, 2.0)}, 1e-6);
  CHECK_MESSAGE(report.passed, report.max_rel_error);
}

TEST_CASE("self-attention over a single row returns the value projection") {
  Rng rng(21);
  AttentionParams p(4, 3, rng);
  Tape tape;
  Matrix x = random_matrix(1, 4, rng);
  auto res = self_attention_with_weights(tape.constant(x), p);
  CHECK(res.weights.value()(0, 0) == 1.0);
  Matrix expected = matmul(x, p.value.value);
  for (std::size_t j = 0; j < 3; ++j) CHECK(res.output.value()(0, j) == doctest::Approx(expected(0, j)).epsilon(1e-14));
}

TEST_CASE("self-attention weight rows sum to one") {
  Rng rng(22);
  AttentionParams p(6, 4, rng);
  Tape tape;
  auto res = self_attention_with_weights(tape.constant(random_matrix(9, 6, rng, 3.0)), p);
  const Matrix& w = res.weights.value();
  CHECK(w.rows() == 9);
  CHECK(w.cols() == 9);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double sum = 0.0;
    for (double v : w.row(i)) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  CHECK(res.output.value().rows() == 9);
  CHECK(res.output.value().cols() == 4);
}

TEST_CASE("self-attention gradients w.r.t. projections and input") {
  Rng rng(23);
  AttentionParams p(5, 4, rng);
  Matrix x = random_matrix(6, 5, rng);
  auto params = finite_difference_check(
      [&](Tape& t) { return self_attention(t.constant(x), p); },
      std::vector<Parameter*>{&p.query, &p.key, &p.value}, 1e-4);
  CHECK_MESSAGE(params.passed, params.max_rel_error, " at ", params.worst);
  auto input = finite_difference_check(
      [&](Tape&, std::span<const Var> in) { return self_attention(in[0], p); }, {x}, 1e-4);
  CHECK_MESSAGE(input.passed, input.max_rel_error);
}

TEST_CASE("self-attention rejects mismatched input width") {
  Rng rng(1);
  AttentionParams p(5, 4, rng);
  Tape tape;
  CHECK_THROWS_AS(self_attention(tape.constant(Matrix(3, 4)), p), DimensionError);
}

TEST_CASE("conv1d with kernel 1 and identity filter is the identity") {
  Rng rng(31);
  Matrix x = random_matrix(5, 3, rng);
  Tape tape;
  Var y = conv1d(tape.constant(x), tape.constant(Matrix::identity(3)), tape.constant(Matrix(1, 3)), 1);
  CHECK(y.value() == x);
}

TEST_CASE("conv1d of zero input with zero bias is zero") {
  Rng rng(32);
  Tape tape;
  Var y = conv1d(tape.constant(Matrix(4, 3)), tape.constant(random_matrix(9, 5, rng)),
                 tape.constant(Matrix(1, 5)), 3);
  CHECK(y.value() == Matrix(4, 5));
}

TEST_CASE("conv1d zero padding by hand") {
  // One channel, kernel 3, filter taps [1, 10, 100] over rows [1, 2, 3].
  Tape tape;
  Var y = conv1d(tape.constant(Matrix{{1}, {2}, {3}}), tape.constant(Matrix{{1}, {10}, {100}}),
                 tape.constant(Matrix{{0.5}}), 3);
  // row 0: 0*1 + 1*10 + 2*100, row 1: 1 + 20 + 300, row 2: 2 + 30 + 0
  CHECK(y.value() == Matrix{{210.5}, {321.5}, {32.5}});
}

TEST_CASE("conv1d gradient") {
  Rng rng(33);
  auto report = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return conv1d(in[0], in[1], in[2], 3); },
      {random_matrix(5, 3, rng), random_matrix(9, 4, rng), random_matrix(1, 4, rng)}, 1e-4);
  CHECK_MESSAGE(report.passed, report.max_rel_error);
}

TEST_CASE("conv1d errors") {
  Tape tape;
  CHECK_THROWS_AS(conv1d(tape.constant(Matrix(0, 3)), tape.constant(Matrix(9, 2)),
                         tape.constant(Matrix(1, 2)), 3),
                  DimensionError);
  CHECK_THROWS_AS(conv1d(tape.constant(Matrix(4, 3)), tape.constant(Matrix(6, 2)),
                         tape.constant(Matrix(1, 2)), 2),
                  DimensionError);
}

TEST_CASE("mean_pool_rows") {
  Tape tape;
  CHECK(mean_pool_rows(tape.constant(Matrix{{1, 2, 3}})).value() == Matrix{{1, 2, 3}});
  CHECK(mean_pool_rows(tape.constant(Matrix{{0, 2}, {2, 0}})).value() == Matrix{{1, 1}});
  CHECK_THROWS_AS(mean_pool_rows(tape.constant(Matrix(0, 2))), DimensionError);

  Rng rng(41);
  Matrix x = random_matrix(7, 4, rng);
  const double s = 3.7;
  Matrix pooled_then_scaled = scale(mean_pool_rows(tape.constant(x)), s).value();
  Matrix scaled_then_pooled = mean_pool_rows(scale(tape.constant(x), s)).value();
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(std::abs(pooled_then_scaled(0, j) - scaled_then_pooled(0, j)) < 1e-12);
}

TEST_CASE("pooling gradients") {
  Rng rng(42);
  auto mean = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return mean_pool_rows(in[0]); },
      {random_matrix(5, 3, rng)}, 1e-6);
  CHECK(mean.passed);
  auto mx = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return max_pool_rows(in[0]); },
      {random_matrix(5, 3, rng)}, 1e-6);
  CHECK(mx.passed);
}

TEST_CASE("elementwise activations and concatenation") {
  Tape tape;
  CHECK(sigmoid(tape.constant(Matrix{{0}})).value()(0, 0) == 0.5);
  CHECK(numkernel::tanh(tape.constant(Matrix{{0}})).value()(0, 0) == 0.0);
  for (double x : {-30.0, -5.0, 5.0, 30.0}) {
    const double s = sigmoid(x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }

  Matrix a{{1, 2}, {3, 4}};
  Matrix b{{5}, {6}};
  CHECK(concat_cols(tape.constant(a), tape.constant(b)).value() == Matrix{{1, 2, 5}, {3, 4, 6}});
  CHECK(concat_rows(tape.constant(a), tape.constant(Matrix{{7, 8}})).value() ==
        Matrix{{1, 2}, {3, 4}, {7, 8}});
  CHECK_THROWS_AS(concat_cols(tape.constant(a), tape.constant(Matrix(3, 1))), DimensionError);
  CHECK_THROWS_AS(concat_rows(tape.constant(a), tape.constant(Matrix(1, 3))), DimensionError);
}

TEST_CASE("activation and structural gradients") {
  Rng rng(51);
  auto check = [&](InputFunction f, std::vector<Matrix> in, double tol) {
    auto r = finite_difference_check(f, std::move(in), tol);
    CHECK_MESSAGE(r.passed, r.max_rel_error, " at ", r.worst);
  };
  check([](Tape&, std::span<const Var> in) { return sigmoid(in[0]); }, {random_matrix(3, 4, rng, 3)}, 1e-6);
  check([](Tape&, std::span<const Var> in) { return numkernel::tanh(in[0]); }, {random_matrix(3, 4, rng, 2)}, 1e-6);
  check([](Tape&, std::span<const Var> in) { return concat_cols(in[0], in[1]); },
        {random_matrix(3, 2, rng), random_matrix(3, 4, rng)}, 1e-6);
  check([](Tape&, std::span<const Var> in) { return concat_rows(in[0], in[1]); },
        {random_matrix(2, 3, rng), random_matrix(4, 3, rng)}, 1e-6);
  check([](Tape&, std::span<const Var> in) { return hadamard(in[0], in[1]); },
        {random_matrix(3, 3, rng), random_matrix(3, 3, rng)}, 1e-6);
  check([](Tape&, std::span<const Var> in) { return affine(in[0], in[1], in[2]); },
        {random_matrix(4, 3, rng), random_matrix(3, 2, rng), random_matrix(1, 2, rng)}, 1e-6);
  check([](Tape&, std::span<const Var> in) { return row_sum(in[0]); }, {random_matrix(4, 3, rng)}, 1e-6);
}

TEST_CASE("harness: linear op error is at rounding level") {
  Rng rng(61);
  auto r = finite_difference_check(
      [](Tape&, std::span<const Var> in) { return scale(in[0], 2.5); }, {random_matrix(4, 4, rng)}, 1e-6);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-9);
}

TEST_CASE("harness: a wrong backward is detected") {
  Rng rng(62);
  auto broken_square = [](Tape& t, std::span<const Var> in) {
    Matrix out = in[0].value();
    for (double& v : out.data()) v *= v;
    const std::size_t ix = in[0].id();
    // Deliberately drops the factor 2.
    return t.record(std::move(out), {in[0]}, [ix](Tape& tp, std::size_t self) {
      if (Matrix* g = tp.grad_target(ix)) {
        auto gd = g->data();
        auto x = tp.value(ix).data();
        auto up = tp.grad(self).data();
        for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += up[i] * x[i];
      }
    });
  };
  auto r = finite_difference_check(broken_square, {random_matrix(3, 3, rng)}, 1e-4);
  CHECK_FALSE(r.passed);
  CHECK(r.max_rel_error > 0.1);
}

TEST_CASE("tape accumulates parameter gradients once per backward") {
  Parameter w(Matrix{{2.0}});
  Tape tape;
  Var x = tape.constant(Matrix{{3.0}});
  // w used twice: y = x*w + x*w
  Var y = add(matmul(x, tape.parameter(w)), matmul(x, tape.parameter(w)));
  tape.backward(y);
  CHECK(w.grad(0, 0) == 6.0);
}

TEST_CASE("operations are deterministic") {
  Rng rng(71);
  AttentionParams p(4, 4, rng);
  Matrix x = random_matrix(5, 4, rng);
  Tape t1, t2;
  Matrix a = self_attention(t1.constant(x), p).value();
  Matrix b = self_attention(t2.constant(x), p).value();
  CHECK(a == b);
}

TEST_CASE("rng determinism and split streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng base(42);
  Rng c1 = base.split(1), c1_again = base.split(1), c2 = base.split(2);
  CHECK(base.counter() == 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 50; ++i) {
    const auto v = c1.next_u64();
    CHECK(v == c1_again.next_u64());
    seen.insert(v);
    seen.insert(c2.next_u64());
  }
  CHECK(seen.size() == 100);

  Rng u(9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    sum += x;
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.01);

  Rng n(10);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double z = n.normal();
    m1 += z;
    m2 += z * z;
  }
  CHECK(std::abs(m1 / 20000) < 0.03);
  CHECK(std::abs(m2 / 20000 - 1.0) < 0.05);

  Rng k(11);
  for (int i = 0; i < 1000; ++i) {
    const auto v = k.uniform_int(-2, 3);
    CHECK(v >= -2);
    CHECK(v <= 3);
  }
}
