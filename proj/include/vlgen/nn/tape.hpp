#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vlgen/nn/parameter.hpp"

namespace vlgen::nn {

class Tape;

// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode autodiff record. One tape per forward pass; values live
// until the tape is destroyed.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  // With grad disabled nothing is recorded for backward (inference).
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf whose gradient is kept on the tape.
  Var variable(Matrix value);
  // Leaf bound to a parameter; backward adds into p.grad. Repeated calls
  // return the same node.
  Var param(Parameter& p);

  // Records an op. The node needs a gradient if any input does.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  bool grad_enabled() const { return grad_enabled_; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const Matrix& value(int id) const { return nodes_[id].value; }
  // Gradient accumulator, zero-filled on first use.
  Matrix& grad(int id);
  // Gradient after backward (zeros if the node received none).
  Matrix grad_of(Var v) const;

  // Seeds d(loss)/d(loss) = seed for a 1x1 loss and propagates.
  void backward(Var loss, double seed = 1.0);
  // Seeds several nodes at once, then propagates in one sweep.
  void backward(const std::vector<std::pair<Var, Matrix>>& seeds);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  Var push(Node node);

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool grad_enabled_;
};

}  // namespace vlgen::nn
