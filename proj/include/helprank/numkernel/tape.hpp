#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "helprank/numkernel/matrix.hpp"

namespace helprank::numkernel {

/// A learned weight matrix and its accumulated gradient.
struct Parameter {
  Matrix value;
  Matrix grad;

  Parameter() = default;
  explicit Parameter(Matrix v) : value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Matrix(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a forward computation and replays it in reverse to produce
/// vector-Jacobian products. One tape per forward pass; not thread-safe.
class Tape {
 public:
  /// Called during backward with the tape and the node's own id; the
  /// node's output gradient is available through grad(id).
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Data leaf; no gradient is tracked.
  Var constant(Matrix value);
  /// Leaf whose gradient is kept on the tape (read it back with grad()).
  Var input(Matrix value);
  /// Leaf bound to a Parameter; backward() adds into p.grad. Repeated
  /// calls with the same Parameter return the same node.
  Var parameter(Parameter& p);

  /// Register an operation result. `inputs` are the nodes it reads; the
  /// result tracks gradients iff any of them does.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  /// Gradient of node `id`; a zero matrix if nothing flowed into it.
  const Matrix& grad(std::size_t id);
  const Matrix& grad(Var v) { return grad(v.id()); }
  /// Accumulation target for backward closures. No-op sink when the node
  /// does not track gradients.
  Matrix* grad_target(std::size_t id);
  Matrix* grad_target(Var v) { return grad_target(v.id()); }

  /// Seed d(out)/d(out) = seed for a 1x1 output and run the reverse sweep.
  void backward(Var out, double seed = 1.0);
  /// Reverse sweep with an explicit output cotangent.
  void backward(Var out, const Matrix& cotangent);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
    bool has_grad = false;
  };

  std::deque<Node> nodes_;  // stable references while the tape grows
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
  bool backward_done_ = false;
};

}  // namespace helprank::numkernel
