#include "vlgen/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace vlgen::nn {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

AdamW::AdamW(ParameterSet& params, AdamWOptions options) : options_(options) {
  for (Parameter* p : params.trainable())
    slots_.push_back({p, Matrix::Zero(p->value.rows(), p->value.cols()), Matrix::Zero(p->value.rows(), p->value.cols()),
                      ends_with(p->name, ".weight") && p->value.rows() > 1 && p->value.cols() > 1});
}

void AdamW::step(double lr) {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, double(t_)), c2 = 1.0 - std::pow(b2, double(t_));
  for (auto& s : slots_) {
    Parameter& p = *s.param;
    if (s.decay && options_.weight_decay > 0) p.value *= 1.0 - lr * options_.weight_decay;
    s.m = b1 * s.m + (1.0 - b1) * p.grad;
    s.v = b2 * s.v + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + options_.eps);
  }
}

double linear_schedule(double base, long step, long total_steps, long warmup_steps) {
  if (warmup_steps > 0 && step < warmup_steps) return base * double(step + 1) / double(warmup_steps);
  if (total_steps <= warmup_steps) return base;
  const double frac = double(step - warmup_steps) / double(total_steps - warmup_steps);
  return base * std::max(0.0, 1.0 - frac);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  double sq = 0;
  const auto trainable = params.trainable();
  for (const Parameter* p : trainable) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (Parameter* p : trainable) p->grad *= f;
  }
  return norm;
}

}  // namespace vlgen::nn
