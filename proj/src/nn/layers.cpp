#include "vlgen/nn/layers.hpp"

#include <cmath>

#include "vlgen/error.hpp"

namespace vlgen::nn {

Linear::Linear(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng, bool trainable, bool with_bias) {
  const double std = std::sqrt(2.0 / double(in + out));
  weight = &ps.add(name + ".weight", normal_matrix(in, out, std, rng), trainable);
  if (with_bias) bias = &ps.add(name + ".bias", Matrix::Zero(1, out), trainable);
}

Var Linear::operator()(Tape& t, Var x) const {
  Var y = matmul(x, t.param(*weight));
  return bias ? add_row(y, t.param(*bias)) : y;
}

LayerNorm::LayerNorm(ParameterSet& ps, const std::string& name, int dim, bool trainable) {
  gain = &ps.add(name + ".gain", Matrix::Ones(1, dim), trainable);
  bias = &ps.add(name + ".bias", Matrix::Zero(1, dim), trainable);
}

Var LayerNorm::operator()(Tape& t, Var x) const { return layer_norm(x, t.param(*gain), t.param(*bias)); }

Embedding::Embedding(ParameterSet& ps, const std::string& name, int rows, int dim, Rng& rng, double stddev,
                     bool trainable) {
  table = &ps.add(name + ".weight", normal_matrix(rows, dim, stddev, rng), trainable);
}

Var Embedding::operator()(Tape& t, const std::vector<int>& ids) const { return gather_rows(t.param(*table), ids); }

MultiHeadAttention::MultiHeadAttention(ParameterSet& ps, const std::string& name, int dim, int h, Rng& rng,
                                       bool trainable)
    : q(ps, name + ".q", dim, dim, rng, trainable),
      k(ps, name + ".k", dim, dim, rng, trainable),
      v(ps, name + ".v", dim, dim, rng, trainable),
      out(ps, name + ".out", dim, dim, rng, trainable),
      heads(h) {
  if (h < 1 || dim % h != 0)
    throw InvalidArgument(name + ": width " + std::to_string(dim) + " is not divisible by " + std::to_string(h) + " heads");
}

Var MultiHeadAttention::operator()(Tape& t, Var x, Var memory, bool causal) const {
  Var kv = memory.valid() ? memory : x;
  return out(t, attention(q(t, x), k(t, kv), v(t, kv), heads, causal));
}

TransformerBlock::TransformerBlock(ParameterSet& ps, const std::string& name, int dim, int heads, bool causal_,
                                   bool cross, Rng& rng, bool trainable)
    : causal(causal_), has_cross(cross) {
  ln_self = LayerNorm(ps, name + ".ln_self", dim, trainable);
  self_attn = MultiHeadAttention(ps, name + ".self_attn", dim, heads, rng, trainable);
  if (cross) {
    ln_cross = LayerNorm(ps, name + ".ln_cross", dim, trainable);
    cross_attn = MultiHeadAttention(ps, name + ".cross_attn", dim, heads, rng, trainable);
  }
  ln_ff = LayerNorm(ps, name + ".ln_ff", dim, trainable);
  ff_in = Linear(ps, name + ".ff_in", dim, 4 * dim, rng, trainable);
  ff_out = Linear(ps, name + ".ff_out", 4 * dim, dim, rng, trainable);
}

Var TransformerBlock::operator()(Tape& t, Var x, Var memory) const {
  x = add(x, self_attn(t, ln_self(t, x), {}, causal));
  if (has_cross) {
    if (!memory.valid()) throw InvalidArgument("cross-attention block called without memory");
    x = add(x, cross_attn(t, ln_cross(t, x), memory, false));
  }
  return add(x, ff_out(t, gelu(ff_in(t, ln_ff(t, x)))));
}

Lstm::Lstm(ParameterSet& ps, const std::string& name, int in, int width, int layers, Rng& rng) : hidden_dim(width) {
  if (layers < 1) throw InvalidArgument(name + ": needs at least one layer");
  for (int l = 0; l < layers; ++l) {
    const std::string p = name + ".layer" + std::to_string(l);
    input.emplace_back(ps, p + ".input", l == 0 ? in : width, 4 * width, rng);
    hidden.emplace_back(ps, p + ".hidden", width, 4 * width, rng, true, false);
    // Forget-gate bias starts at 1.
    input.back().bias->value.middleCols(width, width).setOnes();
  }
}

Var Lstm::operator()(Tape& t, Var sequence) const {
  if (sequence.rows() < 1) throw InvalidArgument("route encoder: empty sequence");
  const Eigen::Index H = hidden_dim;
  std::vector<Var> steps;
  for (Eigen::Index i = 0; i < sequence.rows(); ++i) steps.push_back(slice_rows(sequence, i, 1));
  Var h;
  for (std::size_t l = 0; l < input.size(); ++l) {
    h = t.constant(Matrix::Zero(1, H));
    Var c = t.constant(Matrix::Zero(1, H));
    for (auto& x : steps) {
      Var gates = add(input[l](t, x), hidden[l](t, h));
      Var i = sigmoid(slice_cols(gates, 0, H));
      Var f = sigmoid(slice_cols(gates, H, H));
      Var g = tanh(slice_cols(gates, 2 * H, H));
      Var o = sigmoid(slice_cols(gates, 3 * H, H));
      c = add(mul(f, c), mul(i, g));
      h = mul(o, tanh(c));
      x = h;
    }
  }
  return h;
}

Mlp::Mlp(ParameterSet& ps, const std::string& name, int in, int hidden, int out, Rng& rng, bool trainable)
    : first(ps, name + ".0", in, hidden, rng, trainable), second(ps, name + ".1", hidden, out, rng, trainable) {}

Var Mlp::operator()(Tape& t, Var x) const { return second(t, gelu(first(t, x))); }

}  // namespace vlgen::nn
