#include "helprank/numkernel/tape.hpp"

#include <stdexcept>

#include "helprank/errors.hpp"

namespace helprank::numkernel {

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, true, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  nodes_.push_back(Node{p.value, {}, {}, &p, true, false});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool track = false;
  for (const Var& v : inputs) track = track || nodes_[v.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, track ? std::move(backward) : Backward{},
                        nullptr, track, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  bool track = false;
  for (const Var& v : inputs) track = track || nodes_[v.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, track ? std::move(backward) : Backward{},
                        nullptr, track, false});
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

Matrix* Tape::grad_target(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::backward(Var out, double seed) {
  const Matrix& v = value(out);
  if (v.rows() != 1 || v.cols() != 1) {
    throw DimensionError("backward(seed) needs a 1x1 output, got " + v.shape_string());
  }
  backward(out, Matrix(1, 1, seed));
}

void Tape::backward(Var out, const Matrix& cotangent) {
  if (backward_done_) throw std::logic_error("Tape::backward called twice");
  backward_done_ = true;
  require_same_shape(value(out), cotangent, "backward");
  if (!nodes_[out.id()].requires_grad) return;
  if (Matrix* g = grad_target(out)) axpy(1.0, cotangent, *g);

  for (std::size_t id = out.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.has_grad) continue;
    if (n.backward) {
      // The closure may append gradients to earlier nodes only, so the
      // reference into nodes_ stays valid (no push_back during backward).
      n.backward(*this, id);
    } else if (n.param != nullptr) {
      axpy(1.0, n.grad, n.param->grad);
    }
  }
}

}  // namespace helprank::numkernel
