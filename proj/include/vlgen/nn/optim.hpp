#pragma once

#include <vector>

#include "vlgen/nn/parameter.hpp"

namespace vlgen::nn {

struct AdamWOptions {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled; applied to "*.weight" matrices only
};

// AdamW over the trainable parameters of a set. Frozen parameters are
// never touched.
class AdamW {
 public:
  AdamW(ParameterSet& params, AdamWOptions options);

  // One update with the given learning rate, from the accumulated grads.
  void step(double lr);
  long steps() const { return t_; }
  const AdamWOptions& options() const { return options_; }

 private:
  struct Slot {
    Parameter* param;
    Matrix m, v;
    bool decay;
  };
  std::vector<Slot> slots_;
  AdamWOptions options_;
  long t_ = 0;
};

// Linear decay from base to 0 over total_steps, after optional linear warmup.
double linear_schedule(double base, long step, long total_steps, long warmup_steps = 0);

// Scales all trainable grads so their global L2 norm is at most max_norm.
// Returns the norm before clipping. max_norm <= 0 only measures.
double clip_grad_norm(ParameterSet& params, double max_norm);

}  // namespace vlgen::nn
