#include "helprank/numkernel/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "helprank/errors.hpp"

namespace helprank::numkernel {

namespace {

Tape& same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::logic_error("operands recorded on different tapes");
  return a.tape();
}

void check_rows(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows()) {
    throw DimensionError(std::string(op) + ": row counts differ " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = numkernel::matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (Matrix* ga = tp.grad_target(ia)) axpy(1.0, matmul_nt(g, tp.value(ib)), *ga);
    if (Matrix* gb = tp.grad_target(ib)) axpy(1.0, matmul_tn(tp.value(ia), g), *gb);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix out = numkernel::matmul_nt(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);  // (n x m)
    if (Matrix* ga = tp.grad_target(ia)) axpy(1.0, numkernel::matmul(g, tp.value(ib)), *ga);
    if (Matrix* gb = tp.grad_target(ib)) axpy(1.0, matmul_tn(g, tp.value(ia)), *gb);
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  axpy(1.0, b.value(), out);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (Matrix* ga = tp.grad_target(ia)) axpy(1.0, g, *ga);
    if (Matrix* gb = tp.grad_target(ib)) axpy(1.0, g, *gb);
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw DimensionError("add_row: bias " + rv.shape_string() + " does not broadcast over " +
                         av.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += rv(0, j);
  }
  const std::size_t ia = a.id(), ir = row.id();
  return t.record(std::move(out), {a, row}, [ia, ir](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (Matrix* ga = tp.grad_target(ia)) axpy(1.0, g, *ga);
    if (Matrix* gr = tp.grad_target(ir)) {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*gr)(0, j) += g(i, j);
    }
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  for (double& v : out.data()) v *= s;
  const std::size_t ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, s](Tape& tp, std::size_t self) {
    if (Matrix* ga = tp.grad_target(ia)) axpy(s, tp.grad(self), *ga);
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  auto ob = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= ob[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {a, b}, [ia, ib](Tape& tp, std::size_t self) {
    auto g = tp.grad(self).data();
    if (Matrix* ga = tp.grad_target(ia)) {
      auto bv = tp.value(ib).data();
      auto gd = ga->data();
      for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += g[i] * bv[i];
    }
    if (Matrix* gb = tp.grad_target(ib)) {
      auto av = tp.value(ia).data();
      auto gd = gb->data();
      for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += g[i] * av[i];
    }
  });
}

Var sigmoid(Var x) {
  Matrix out = x.value();
  for (double& v : out.data()) v = sigmoid(v);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    auto g = tp.grad(self).data();
    auto y = tp.value(self).data();
    auto gd = gx->data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var x) {
  Matrix out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    auto g = tp.grad(self).data();
    auto y = tp.value(self).data();
    auto gd = gx->data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax_row(Var x) {
  Matrix out = numkernel::softmax_row(x.value());
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    const Matrix& g = tp.grad(self);
    const Matrix& y = tp.value(self);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      auto yr = y.row(i);
      auto gr = g.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < yr.size(); ++j) dot += gr[j] * yr[j];
      auto out = gx->row(i);
      for (std::size_t j = 0; j < yr.size(); ++j) out[j] += yr[j] * (gr[j] - dot);
    }
  });
}

Var concat_cols(Var a, Var b) { return concat_cols(std::vector<Var>{a, b}); }

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    check_rows(parts.front().value(), p.value(), "concat_cols");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(off));
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.cols();
  }
  return t.record(std::move(out), parts, [ids, offsets](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Matrix* gp = tp.grad_target(ids[k]);
      if (!gp) continue;
      for (std::size_t i = 0; i < gp->rows(); ++i)
        for (std::size_t j = 0; j < gp->cols(); ++j) (*gp)(i, j) += g(i, offsets[k] + j);
    }
  });
}

Var concat_rows(Var a, Var b) { return concat_rows(std::vector<Var>{a, b}); }

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  Tape& t = parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column counts differ " + parts.front().value().shape_string() +
                           " vs " + p.value().shape_string());
    }
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.rows();
  }
  return t.record(Matrix(rows, cols, std::move(data)), parts,
                  [ids, offsets, cols](Tape& tp, std::size_t self) {
                    auto g = tp.grad(self).data();
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      Matrix* gp = tp.grad_target(ids[k]);
                      if (!gp) continue;
                      auto gd = gp->data();
                      const double* src = g.data() + offsets[k] * cols;
                      for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += src[i];
                    }
                  });
}

Var mean_pool_rows(Var x) {
  const Matrix& v = x.value();
  if (v.rows() == 0) throw DimensionError("mean_pool_rows: empty input " + v.shape_string());
  Matrix out(1, v.cols());
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j) out(0, j) += v(i, j);
  const double inv = 1.0 / static_cast<double>(v.rows());
  for (double& o : out.data()) o *= inv;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, inv](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    const Matrix& g = tp.grad(self);
    for (std::size_t i = 0; i < gx->rows(); ++i)
      for (std::size_t j = 0; j < gx->cols(); ++j) (*gx)(i, j) += g(0, j) * inv;
  });
}

Var max_pool_rows(Var x) {
  const Matrix& v = x.value();
  if (v.rows() == 0) throw DimensionError("max_pool_rows: empty input " + v.shape_string());
  Matrix out(1, v.cols());
  std::vector<std::size_t> arg(v.cols(), 0);
  for (std::size_t j = 0; j < v.cols(); ++j) {
    out(0, j) = v(0, j);
    for (std::size_t i = 1; i < v.rows(); ++i) {
      if (v(i, j) > out(0, j)) {
        out(0, j) = v(i, j);
        arg[j] = i;
      }
    }
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, arg](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    const Matrix& g = tp.grad(self);
    for (std::size_t j = 0; j < arg.size(); ++j) (*gx)(arg[j], j) += g(0, j);
  });
}

Var im2col_same(Var x, std::size_t kernel) {
  const Matrix& v = x.value();
  if (kernel == 0 || kernel % 2 == 0) {
    throw DimensionError("conv1d: kernel size must be odd, got " + std::to_string(kernel));
  }
  if (v.rows() < 1) throw DimensionError("conv1d: sequence shorter than 1 " + v.shape_string());
  const std::size_t n = v.rows(), c = v.cols();
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  Matrix out(n, kernel * c);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t o = 0; o < kernel; ++o) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(o) - pad;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
      auto in = v.row(static_cast<std::size_t>(src));
      std::copy(in.begin(), in.end(), out.row(t).begin() + static_cast<std::ptrdiff_t>(o * c));
    }
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, kernel, pad, n, c](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    const Matrix& g = tp.grad(self);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t o = 0; o < kernel; ++o) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(o) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
        auto dst = gx->row(static_cast<std::size_t>(src));
        for (std::size_t j = 0; j < c; ++j) dst[j] += g(t, o * c + j);
      }
    }
  });
}

Var conv1d(Var x, Var filters, Var bias, std::size_t kernel) {
  const Matrix& f = filters.value();
  if (f.rows() != kernel * x.cols()) {
    throw DimensionError("conv1d: filters " + f.shape_string() + " do not match kernel " +
                         std::to_string(kernel) + " over input " + x.value().shape_string());
  }
  return add_row(matmul(im2col_same(x, kernel), filters), bias);
}

Var affine(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

Var row_sum(Var x) {
  const Matrix& v = x.value();
  Matrix out(v.rows(), 1);
  for (std::size_t i = 0; i < v.rows(); ++i) {
    double s = 0.0;
    for (double e : v.row(i)) s += e;
    out(i, 0) = s;
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    const Matrix& g = tp.grad(self);
    for (std::size_t i = 0; i < gx->rows(); ++i)
      for (double& e : gx->row(i)) e += g(i, 0);
  });
}

Var sum_all(Var x) {
  double s = 0.0;
  for (double e : x.value().data()) s += e;
  const std::size_t ix = x.id();
  return x.tape().record(Matrix(1, 1, s), {x}, [ix](Tape& tp, std::size_t self) {
    Matrix* gx = tp.grad_target(ix);
    if (!gx) return;
    const double g = tp.grad(self)(0, 0);
    for (double& e : gx->data()) e += g;
  });
}

Var weighted_sum(Var x, const Matrix& w) {
  require_same_shape(x.value(), w, "weighted_sum");
  double s = 0.0;
  auto xv = x.value().data();
  auto wv = w.data();
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * wv[i];
  const std::size_t ix = x.id();
  return x.tape().record(Matrix(1, 1, s), {x}, [ix, w](Tape& tp, std::size_t self) {
    if (Matrix* gx = tp.grad_target(ix)) axpy(tp.grad(self)(0, 0), w, *gx);
  });
}

}  // namespace helprank::numkernel
