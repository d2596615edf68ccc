#pragma once

#include <string>
#include <vector>

#include "vlgen/nn/ops.hpp"

namespace vlgen::nn {

// Weights are created in the set under "<name>.weight" / "<name>.bias".
struct Linear {
  Parameter* weight = nullptr;  // in x out
  Parameter* bias = nullptr;    // 1 x out, may be absent

  Linear() = default;
  Linear(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng, bool trainable = true,
         bool with_bias = true);
  Var operator()(Tape& t, Var x) const;
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  LayerNorm() = default;
  LayerNorm(ParameterSet& ps, const std::string& name, int dim, bool trainable = true);
  Var operator()(Tape& t, Var x) const;
};

struct Embedding {
  Parameter* table = nullptr;  // rows x dim

  Embedding() = default;
  Embedding(ParameterSet& ps, const std::string& name, int rows, int dim, Rng& rng, double stddev,
            bool trainable = true);
  Var operator()(Tape& t, const std::vector<int>& ids) const;
};

struct MultiHeadAttention {
  Linear q, k, v, out;
  int heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet& ps, const std::string& name, int dim, int heads, Rng& rng, bool trainable = true);
  Var operator()(Tape& t, Var x, Var memory, bool causal) const;
};

// Pre-norm block: self-attention, optional cross-attention over a memory
// sequence, then a GELU feed-forward of width 4*dim.
struct TransformerBlock {
  LayerNorm ln_self, ln_cross, ln_ff;
  MultiHeadAttention self_attn, cross_attn;
  Linear ff_in, ff_out;
  bool causal = false;
  bool has_cross = false;

  TransformerBlock() = default;
  TransformerBlock(ParameterSet& ps, const std::string& name, int dim, int heads, bool causal, bool cross, Rng& rng,
                   bool trainable = true);
  Var operator()(Tape& t, Var x, Var memory = {}) const;
};

// Stacked LSTM; returns the top layer's final hidden state (1 x hidden).
struct Lstm {
  std::vector<Linear> input, hidden;  // per layer; gates ordered i, f, g, o
  int hidden_dim = 0;

  Lstm() = default;
  Lstm(ParameterSet& ps, const std::string& name, int in, int hidden_dim, int layers, Rng& rng);
  Var operator()(Tape& t, Var sequence) const;
};

// Two linear layers with GELU between.
struct Mlp {
  Linear first, second;

  Mlp() = default;
  Mlp(ParameterSet& ps, const std::string& name, int in, int hidden, int out, Rng& rng, bool trainable = true);
  Var operator()(Tape& t, Var x) const;
};

}  // namespace vlgen::nn
