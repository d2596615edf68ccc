#include "vlgen/captioner/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "vlgen/captioner/checkpoint.hpp"
#include "vlgen/error.hpp"
#include "vlgen/log.hpp"
#include "vlgen/nn/optim.hpp"

namespace vlgen::captioner {

using namespace nn;

namespace {

const std::vector<int>& prompt_for(const CaptionerModel& model, const Sample& s) {
  static const std::vector<int> none;
  return model.config().flags.prompt ? s.prompt : none;
}

std::vector<int> draw_negatives(std::size_t b, Rng& rng) {
  std::vector<int> neg(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, b - 2);
    std::size_t n = pick(rng);
    if (n >= i) ++n;
    neg[i] = int(n);
  }
  return neg;
}

struct ContrastiveResult {
  double loss = 0;
  std::vector<Matrix> input_grads, text_grads;  // per sample, 1 x d
};

// The contrastive term on detached embeddings. With `backward`, the
// logit-scale parameter receives lambda * dL directly and the per-row
// gradients (already scaled by lambda) are returned for injection into the
// per-sample graphs.
ContrastiveResult contrastive_step(const CaptionerModel& model, const std::vector<Matrix>& inputs,
                                   const std::vector<Matrix>& texts, bool backward, Rng& rng) {
  const auto& cfg = model.config();
  Tape t(backward);
  std::vector<Var> in_rows, text_rows;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    in_rows.push_back(backward ? t.variable(inputs[i]) : t.constant(inputs[i]));
    text_rows.push_back(backward ? t.variable(texts[i]) : t.constant(texts[i]));
  }
  Var sim = matmul(l2_normalize_rows(concat_rows(in_rows)), transpose(l2_normalize_rows(concat_rows(text_rows))));
  Var logits = scale_by(sim, model.logit_scale(t));
  Var loss = cfg.negatives == Negatives::kSampled && inputs.size() > 1
                 ? sampled_contrastive_loss_from_logits(logits, draw_negatives(inputs.size(), rng))
                 : contrastive_loss_from_logits(logits);
  ContrastiveResult r;
  r.loss = loss.scalar();
  if (backward) {
    t.backward(loss, cfg.contrastive_weight);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      r.input_grads.push_back(t.grad_of(in_rows[i]));
      r.text_grads.push_back(t.grad_of(text_rows[i]));
    }
  }
  return r;
}

}  // namespace

BatchLoss batch_loss(const CaptionerModel& model, std::span<const Sample* const> batch, bool backward, Rng* rng) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  const auto& cfg = model.config();
  const bool contrastive = cfg.flags.contrastive;
  const double inv_b = 1.0 / double(batch.size());
  Rng fallback(cfg.seed);
  Rng& draw = rng ? *rng : fallback;

  BatchLoss out;
  out.weight = contrastive ? cfg.contrastive_weight : 0.0;

  if (!backward) {
    std::vector<Matrix> inputs, texts;
    for (const Sample* s : batch) {
      Tape t(false);
      const auto c = model.condition(t, *s);
      out.gen_loss += model.generation_loss(t, c, prompt_for(model, *s), s->target).scalar() * inv_b;
      if (contrastive) {
        inputs.push_back(model.input_embedding(t, c).value());
        texts.push_back(model.text_embedding(t, s->target).value());
      }
    }
    if (contrastive) out.con_loss = contrastive_step(model, inputs, texts, false, draw).loss;
    return out;
  }

  // Two passes when the contrastive term couples the batch: embeddings
  // first, then one graph per sample with the coupled gradient injected.
  ContrastiveResult coupled;
  if (contrastive) {
    std::vector<Matrix> inputs, texts;
    for (const Sample* s : batch) {
      Tape t(false);
      const auto c = model.condition(t, *s);
      inputs.push_back(model.input_embedding(t, c).value());
      texts.push_back(model.text_embedding(t, s->target).value());
    }
    coupled = contrastive_step(model, inputs, texts, true, draw);
    out.con_loss = coupled.loss;
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = *batch[i];
    Tape t(true);
    const auto c = model.condition(t, s);
    Var gen = model.generation_loss(t, c, prompt_for(model, s), s.target);
    out.gen_loss += gen.scalar() * inv_b;
    std::vector<std::pair<Var, Matrix>> seeds{{gen, Matrix::Constant(1, 1, inv_b)}};
    if (contrastive) {
      seeds.emplace_back(model.input_embedding(t, c), coupled.input_grads[i]);
      seeds.emplace_back(model.text_embedding(t, s.target), coupled.text_grads[i]);
    }
    t.backward(seeds);
  }
  return out;
}

BatchLoss evaluate_loss(const CaptionerModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) throw InvalidArgument("evaluate_loss: no samples");
  const std::size_t bs = std::size_t(model.config().val_batch_size);
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  BatchLoss total;
  for (std::size_t start = 0; start < ptrs.size(); start += bs) {
    const std::size_t n = std::min(bs, ptrs.size() - start);
    const BatchLoss b = batch_loss(model, std::span(ptrs).subspan(start, n), false);
    const double w = double(n) / double(ptrs.size());
    total.gen_loss += b.gen_loss * w;
    total.con_loss += b.con_loss * w;
    total.weight = b.weight;
  }
  return total;
}

double token_accuracy(const CaptionerModel& model, const std::vector<Sample>& samples) {
  long correct = 0, scored = 0;
  for (const auto& s : samples) {
    Tape t(false);
    const auto c = model.condition(t, s);
    std::vector<int> inputs, targets;
    CaptionerModel::teacher_forcing(prompt_for(model, s), s.target, inputs, targets);
    const Matrix& logits = model.decode(t, c, inputs).value();
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (targets[j] < 0) continue;
      Eigen::Index best;
      logits.row(Eigen::Index(j)).maxCoeff(&best);
      correct += best == targets[j];
      ++scored;
    }
  }
  return scored ? double(correct) / double(scored) : 0.0;
}

TrainResult train(CaptionerModel& model, const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const TrainOptions& options) {
  if (train_samples.empty()) throw InvalidArgument("train: empty training set");
  const CaptionerConfig& cfg = model.config();
  ParameterSet& ps = model.params();
  AdamW optimizer(ps, {.lr = cfg.lr, .weight_decay = cfg.weight_decay});
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  const std::size_t bs = std::size_t(cfg.batch_size);
  const long steps_per_epoch = long((train_samples.size() + bs - 1) / bs);
  const long total_steps = steps_per_epoch * cfg.epochs;

  std::ofstream csv;
  if (!options.metrics_csv.empty()) {
    csv.open(options.metrics_csv);
    if (!csv) throw Error("cannot write " + options.metrics_csv.string());
    csv.precision(9);
    csv << "epoch,gen_loss,con_loss,val_loss\n";
  }

  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_values;
  auto keep_best = [&] {
    best_values.clear();
    for (const Parameter* p : std::as_const(ps).all()) best_values.push_back(p->value);
  };

  std::vector<std::size_t> order(train_samples.size());
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics m;
    m.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<const Sample*> batch;
      for (std::size_t j = start; j < std::min(order.size(), start + bs); ++j) batch.push_back(&train_samples[order[j]]);
      ps.zero_grad();
      const BatchLoss b = batch_loss(model, batch, true, &rng);
      clip_grad_norm(ps, cfg.grad_clip);
      optimizer.step(linear_schedule(cfg.lr, step++, total_steps, cfg.warmup_steps));
      const double w = double(batch.size()) / double(order.size());
      m.gen_loss += b.gen_loss * w;
      m.con_loss += b.con_loss * w;
    }
    m.val_loss = val_samples.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : evaluate_loss(model, val_samples).total();
    const double key = val_samples.empty() ? -double(epoch) : m.val_loss;
    if (key < result.best_val || best_values.empty()) {
      result.best_val = key;
      result.best_epoch = epoch;
      keep_best();
    }
    if (csv.is_open()) csv << m.epoch << ',' << m.gen_loss << ',' << m.con_loss << ',' << m.val_loss << std::endl;
    result.history.push_back(m);
    if (options.on_epoch) options.on_epoch(m);
  }
  if (val_samples.empty()) result.best_val = std::numeric_limits<double>::quiet_NaN();

  std::size_t i = 0;
  for (Parameter* p : ps.all()) p->value = best_values[i++];
  if (!options.checkpoint.empty()) save_checkpoint(model, options.checkpoint);
  return result;
}

}  // namespace vlgen::captioner
