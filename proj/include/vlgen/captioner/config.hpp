#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vlgen/kv_config.hpp"

namespace vlgen::captioner {

// Input and training switches. Valid combinations are the nine system
// variants: {TD, TD+Reg+Act, TD+Reg+Act+Pano} x {-, P, P+C}.
struct VariantFlags {
  bool td = true;
  bool reg = false;
  bool act = false;
  bool pano = false;
  bool prompt = false;
  bool contrastive = false;

  friend bool operator==(const VariantFlags&, const VariantFlags&) = default;
};

// "TD", "TD+P", ..., "TD+Reg+Act+Pano+P+C".
std::string variant_name(const VariantFlags& flags);
// Throws InvalidArgument (listing the valid names) for anything else.
VariantFlags parse_variant(std::string_view name);
// Throws InvalidArgument unless the flags form one of the nine variants.
void validate_variant(const VariantFlags& flags);
std::vector<std::string> variant_names();

enum class Conditioning { kPrefix, kCrossAttention };
enum class Negatives { kInBatch, kSampled };

struct CaptionerConfig {
  // Model.
  int image_size = 384;
  int patch_size = 16;
  int hidden_dim = 128;
  int map_depth = 2;
  int map_heads = 4;
  int text_depth = 1;
  int text_heads = 4;
  int route_layers = 3;
  int pano_depth = 1;  // frozen
  int pano_heads = 4;
  int pano_patch = 8;
  int pano_height = 16;
  int pano_width = 32;
  int mlp_layers = 2;
  int decoder_depth = 2;
  int decoder_heads = 4;
  int max_instruction_len = 48;  // target tokens, EOS included
  int max_prompt_len = 32;
  double contrastive_weight = 0.1;
  double temperature = 0.07;  // initial value; learned
  VariantFlags flags;
  Conditioning conditioning = Conditioning::kPrefix;
  Negatives negatives = Negatives::kInBatch;
  int beam_width = 1;

  // Training.
  int epochs = 25;
  int batch_size = 32;
  int val_batch_size = 64;
  double lr = 5e-5;
  double weight_decay = 0.01;
  double grad_clip = 1.0;  // <= 0 disables
  int warmup_steps = 0;
  std::uint64_t seed = 0;

  // Throws InvalidArgument naming the offending key.
  void validate() const;

  int patches_per_side() const { return image_size / patch_size; }
  int patch_count() const { return patches_per_side() * patches_per_side(); }
  int patch_width() const { return patch_size * patch_size * 3; }

  // Keys under model.*, train.* and "variant"; see README. Unknown keys in
  // those sections are rejected.
  static CaptionerConfig from_kv(const KeyValueConfig& kv);
  static CaptionerConfig from_kv(const KeyValueConfig& kv, CaptionerConfig base);
  nlohmann::json to_json() const;
  static CaptionerConfig from_json(const nlohmann::json& j);

  // Small dimensions used by tests and toy runs.
  static CaptionerConfig tiny();
};

}  // namespace vlgen::captioner
