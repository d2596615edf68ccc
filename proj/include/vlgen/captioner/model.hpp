#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vlgen/captioner/config.hpp"
#include "vlgen/captioner/sample.hpp"
#include "vlgen/captioner/vocabulary.hpp"
#include "vlgen/nn/layers.hpp"

namespace vlgen::captioner {

using nn::Tape;
using nn::Var;

// Parameter name prefixes, for checksums and gradient checks.
inline constexpr const char* kMapPrefix = "map.";
inline constexpr const char* kRegionPrefix = "region_embed.";
inline constexpr const char* kActionPrefix = "action_embed.";
inline constexpr const char* kRoutePrefix = "route.";
inline constexpr const char* kPanoFrozenPrefix = "pano.frozen.";
inline constexpr const char* kPanoMlpPrefix = "pano.mlp.";

// Symmetric cross-entropy of a B x B similarity matrix against the
// identity pairing: mean of the row-wise and column-wise losses.
Var contrastive_loss_from_logits(Var c_pred);

// Row i scored against its positive and one sampled negative column
// neg[i] (and the transposed direction likewise). B = 1 gives 0.
Var sampled_contrastive_loss_from_logits(Var c_pred, const std::vector<int>& negatives);

// The instruction generator: map, point-context, route and panorama
// encoders, summed fusion, and an autoregressive transformer decoder, plus
// a text encoder and projections for the contrastive objective. Every
// module exists regardless of flags; disabled inputs are simply unused.
class CaptionerModel {
 public:
  CaptionerModel(CaptionerConfig config, Vocabulary vocab);

  const CaptionerConfig& config() const { return config_; }
  CaptionerConfig& mutable_config() { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  nn::ParameterSet& params() { return *params_; }
  const nn::ParameterSet& params() const { return *params_; }

  struct MapEncoding {
    Var patches;  // patch_count x d
    Var pooled;   // 1 x d
  };
  MapEncoding encode_map(Tape& t, const MapPatches& map) const;

  // K x d: mean region-word embedding (zero without regions) plus the
  // action embedding, per point. Either part may be switched off.
  Var encode_point_context(Tape& t, const std::vector<std::vector<std::vector<int>>>& point_regions,
                           const std::vector<int>& actions, bool use_regions = true, bool use_actions = true) const;
  Var encode_route(Tape& t, Var contexts) const;
  // Frozen encoder output per image (K x d); no gradients.
  Matrix frozen_panorama_features(const Matrix& images) const;
  Var encode_panoramas(Tape& t, const Matrix& images) const;
  // Elementwise sum; throws InvalidArgument when empty.
  static Var fuse(const std::vector<Var>& parts);

  struct Conditioning {
    Var fused;   // 1 x d
    Var memory;  // cross-attention memory (fused vector then map patches)
  };
  // Applies the variant flags. Throws when no input is enabled.
  Conditioning condition(Tape& t, const Sample& s) const;

  // Logits (tokens.size() x V): row j predicts the token after tokens[j].
  Var decode(Tape& t, const Conditioning& c, const std::vector<int>& tokens) const;

  // Teacher-forced cross-entropy over the target tokens only. The decoder
  // sees BOS, then the prompt (if given), then the target; prompt positions
  // and PAD are never scored. `scored` receives the number of scored tokens.
  Var generation_loss(Tape& t, const Conditioning& c, const std::vector<int>& prompt, const std::vector<int>& target,
                      int* scored = nullptr) const;

  // Decoder input and per-row targets (-1 = unscored) for the above.
  static void teacher_forcing(const std::vector<int>& prompt, const std::vector<int>& target, std::vector<int>& inputs,
                              std::vector<int>& targets);

  Var input_embedding(Tape& t, const Conditioning& c) const;  // E_input, 1 x d
  Var text_embedding(Tape& t, const std::vector<int>& target) const;  // E_text, 1 x d
  Var logit_scale(Tape& t) const;  // 1 / temperature

  // Greedy (or beam, per config) decoding. With use_prompt the decoder
  // continues after the sample's prompt and only the continuation is
  // returned.
  std::vector<int> generate_ids(const Sample& s, bool use_prompt) const;
  std::string generate(const Sample& s, bool use_prompt) const;

 private:
  CaptionerConfig config_;
  Vocabulary vocab_;
  std::unique_ptr<nn::ParameterSet> params_;

  // Map encoder.
  nn::Parameter* patch_weight_;
  nn::Parameter* patch_bias_;
  nn::Parameter* map_pos_;
  nn::Parameter* pool_token_;
  std::vector<nn::TransformerBlock> map_blocks_;
  nn::LayerNorm map_ln_;
  nn::MultiHeadAttention map_pool_;
  nn::LayerNorm map_out_ln_;
  // Point context and route.
  nn::Embedding region_embed_, action_embed_;
  nn::Lstm route_;
  // Panoramas.
  nn::Linear pano_patch_;
  nn::Parameter* pano_pos_;
  std::vector<nn::TransformerBlock> pano_blocks_;
  nn::LayerNorm pano_ln_;
  nn::Mlp pano_mlp_;
  // Decoder.
  nn::Embedding token_embed_;
  nn::Parameter* decoder_pos_;
  std::vector<nn::TransformerBlock> decoder_blocks_;
  nn::LayerNorm decoder_ln_;
  nn::Linear lm_head_;
  // Contrastive.
  nn::Parameter* text_pos_;
  std::vector<nn::TransformerBlock> text_blocks_;
  nn::LayerNorm text_ln_;
  nn::Linear text_proj_, input_proj_;
  nn::Parameter* logit_scale_;

  int max_positions() const;
};

}  // namespace vlgen::captioner
