#include "vlgen/nn/tape.hpp"

#include "vlgen/error.hpp"

namespace vlgen::nn {

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw InvalidArgument("scalar() on a " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()) + " value");
  return v(0, 0);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, int(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.param = &p;
  n.requires_grad = grad_enabled_ && p.trainable;
  Var v = push(std::move(n));
  param_nodes_[&p] = v.id_;
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (in.tape_ != this) throw InvalidArgument("op mixes values from different tapes");
      n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (in.tape_ != this) throw InvalidArgument("op mixes values from different tapes");
      n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::grad_of(Var v) const {
  const Node& n = nodes_[v.id_];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss, double seed) {
  if (loss.value().size() != 1) throw InvalidArgument("backward(loss) needs a 1x1 loss");
  backward({{loss, Matrix::Constant(1, 1, seed)}});
}

void Tape::backward(const std::vector<std::pair<Var, Matrix>>& seeds) {
  if (!grad_enabled_) throw InvalidArgument("backward on a tape recorded without gradients");
  int last = -1;
  for (const auto& [v, g] : seeds) {
    if (v.tape_ != this) throw InvalidArgument("backward seed from another tape");
    if (g.rows() != v.rows() || g.cols() != v.cols()) throw InvalidArgument("backward seed shape mismatch");
    if (!nodes_[v.id_].requires_grad) continue;
    grad(v.id_) += g;
    last = std::max(last, v.id_);
  }
  for (int id = last; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param) n.param->grad += n.grad;
  }
}

}  // namespace vlgen::nn
