#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "vlgen/captioner/model.hpp"

namespace vlgen::captioner {

struct BatchLoss {
  double gen_loss = 0;  // mean over samples of token-mean cross-entropy
  double con_loss = 0;  // 0 when the contrastive objective is off
  double weight = 0;    // lambda; 0 when the contrastive objective is off
  double total() const { return gen_loss + weight * con_loss; }
};

// Forward pass over one batch. With `backward` the gradient of
// gen_loss + lambda * con_loss is added into the parameter grads.
// `rng` draws sampled negatives (only used in that mode).
BatchLoss batch_loss(const CaptionerModel& model, std::span<const Sample* const> batch, bool backward,
                     nn::Rng* rng = nullptr);

// Mean batch losses over a sample set, in validation-size batches.
BatchLoss evaluate_loss(const CaptionerModel& model, const std::vector<Sample>& samples);

// Teacher-forced next-token accuracy over scored positions.
double token_accuracy(const CaptionerModel& model, const std::vector<Sample>& samples);

struct EpochMetrics {
  int epoch = 0;
  double gen_loss = 0;
  double con_loss = 0;
  double val_loss = 0;  // NaN without validation samples
};

struct TrainOptions {
  std::filesystem::path metrics_csv;  // empty = not written
  std::filesystem::path checkpoint;   // best-val checkpoint; empty = not written
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_val = 0;
};

// AdamW with a linear schedule and gradient clipping. Batch order is drawn
// from the config seed. Afterwards the model holds the parameters of the
// epoch with the lowest validation loss (the last epoch without
// validation samples). Throws InvalidArgument on an empty training set.
TrainResult train(CaptionerModel& model, const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const TrainOptions& options = {});

}  // namespace vlgen::captioner
