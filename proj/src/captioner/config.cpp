#include "vlgen/captioner/config.hpp"

#include <functional>
#include <map>

#include "vlgen/error.hpp"

namespace vlgen::captioner {

std::string variant_name(const VariantFlags& f) {
  std::string s;
  auto part = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  part(f.td, "TD");
  part(f.reg, "Reg");
  part(f.act, "Act");
  part(f.pano, "Pano");
  part(f.prompt, "P");
  part(f.contrastive, "C");
  return s.empty() ? "none" : s;
}

std::vector<std::string> variant_names() {
  std::vector<std::string> out;
  for (int input = 0; input < 3; ++input)
    for (int extra = 0; extra < 3; ++extra) {
      VariantFlags f;
      f.reg = f.act = input >= 1;
      f.pano = input == 2;
      f.prompt = extra >= 1;
      f.contrastive = extra == 2;
      out.push_back(variant_name(f));
    }
  return out;
}

namespace {

std::string valid_list() {
  std::string s;
  for (const auto& n : variant_names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

void validate_variant(const VariantFlags& f) {
  const bool ok = f.td && f.reg == f.act && (!f.pano || f.reg) && (!f.contrastive || f.prompt);
  if (!ok) throw InvalidArgument("unsupported variant " + variant_name(f) + "; valid variants: " + valid_list());
}

VariantFlags parse_variant(std::string_view name) {
  VariantFlags f;
  f.td = false;
  std::size_t pos = 0;
  while (pos <= name.size()) {
    const auto next = name.find('+', pos);
    const auto part = name.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    bool* slot = part == "TD"     ? &f.td
                 : part == "Reg"  ? &f.reg
                 : part == "Act"  ? &f.act
                 : part == "Pano" ? &f.pano
                 : part == "P"    ? &f.prompt
                 : part == "C"    ? &f.contrastive
                                  : nullptr;
    if (!slot || *slot)
      throw InvalidArgument("unknown variant '" + std::string(name) + "'; valid variants: " + valid_list());
    *slot = true;
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  validate_variant(f);
  if (variant_name(f) != name)
    throw InvalidArgument("variant '" + std::string(name) + "' must be written as " + variant_name(f));
  return f;
}

void CaptionerConfig::validate() const {
  auto positive = [](int v, const char* key) {
    if (v < 1) throw InvalidArgument(std::string(key) + " must be >= 1, got " + std::to_string(v));
  };
  positive(image_size, "model.image_size");
  positive(patch_size, "model.patch_size");
  if (image_size % patch_size != 0)
    throw InvalidArgument("model.image_size (" + std::to_string(image_size) + ") must be divisible by model.patch_size (" +
                          std::to_string(patch_size) + ")");
  positive(hidden_dim, "model.hidden_dim");
  if (map_depth < 0) throw InvalidArgument("model.map_depth must be >= 0");
  if (text_depth < 0) throw InvalidArgument("model.text_depth must be >= 0");
  if (pano_depth < 0) throw InvalidArgument("model.pano_depth must be >= 0");
  positive(decoder_depth, "model.decoder_depth");
  positive(route_layers, "model.route_layers");
  for (auto [heads, key] : {std::pair{map_heads, "model.map_heads"}, {text_heads, "model.text_heads"},
                            {pano_heads, "model.pano_heads"}, {decoder_heads, "model.decoder_heads"}}) {
    positive(heads, key);
    if (hidden_dim % heads != 0)
      throw InvalidArgument(std::string(key) + " (" + std::to_string(heads) + ") must divide model.hidden_dim (" +
                            std::to_string(hidden_dim) + ")");
  }
  positive(pano_patch, "model.pano_patch");
  if (pano_height % pano_patch != 0 || pano_width % pano_patch != 0)
    throw InvalidArgument("model.pano_patch must divide the panorama size");
  if (mlp_layers != 2) throw InvalidArgument("model.mlp_layers must be 2");
  positive(max_instruction_len, "model.max_instruction_len");
  if (max_prompt_len < 0) throw InvalidArgument("model.max_prompt_len must be >= 0");
  if (!(contrastive_weight >= 0)) throw InvalidArgument("model.contrastive_weight must be >= 0");
  if (!(temperature > 0)) throw InvalidArgument("model.temperature must be > 0");
  positive(beam_width, "model.beam_width");
  validate_variant(flags);
  if (epochs < 0) throw InvalidArgument("train.epochs must be >= 0");
  positive(batch_size, "train.batch_size");
  positive(val_batch_size, "train.val_batch_size");
  if (!(lr > 0)) throw InvalidArgument("train.lr must be > 0");
  if (!(weight_decay >= 0)) throw InvalidArgument("train.weight_decay must be >= 0");
  if (warmup_steps < 0) throw InvalidArgument("train.warmup_steps must be >= 0");
}

namespace {

struct Field {
  std::function<void(CaptionerConfig&, const KeyValueConfig&, const std::string&)> read;
  std::function<nlohmann::json(const CaptionerConfig&)> write;
  std::function<void(CaptionerConfig&, const nlohmann::json&)> from_json;
};

template <typename T>
Field number_field(T CaptionerConfig::*member) {
  return {[member](CaptionerConfig& c, const KeyValueConfig& kv, const std::string& key) {
            if constexpr (std::is_floating_point_v<T>)
              c.*member = kv.get_double(key, c.*member);
            else
              c.*member = T(kv.get_int(key, (long long)(c.*member)));
          },
          [member](const CaptionerConfig& c) { return nlohmann::json(c.*member); },
          [member](CaptionerConfig& c, const nlohmann::json& j) { c.*member = j.get<T>(); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = {
      {"model.image_size", number_field(&CaptionerConfig::image_size)},
      {"model.patch_size", number_field(&CaptionerConfig::patch_size)},
      {"model.hidden_dim", number_field(&CaptionerConfig::hidden_dim)},
      {"model.map_depth", number_field(&CaptionerConfig::map_depth)},
      {"model.map_heads", number_field(&CaptionerConfig::map_heads)},
      {"model.text_depth", number_field(&CaptionerConfig::text_depth)},
      {"model.text_heads", number_field(&CaptionerConfig::text_heads)},
      {"model.route_layers", number_field(&CaptionerConfig::route_layers)},
      {"model.pano_depth", number_field(&CaptionerConfig::pano_depth)},
      {"model.pano_heads", number_field(&CaptionerConfig::pano_heads)},
      {"model.pano_patch", number_field(&CaptionerConfig::pano_patch)},
      {"model.pano_height", number_field(&CaptionerConfig::pano_height)},
      {"model.pano_width", number_field(&CaptionerConfig::pano_width)},
      {"model.mlp_layers", number_field(&CaptionerConfig::mlp_layers)},
      {"model.decoder_depth", number_field(&CaptionerConfig::decoder_depth)},
      {"model.decoder_heads", number_field(&CaptionerConfig::decoder_heads)},
      {"model.max_instruction_len", number_field(&CaptionerConfig::max_instruction_len)},
      {"model.max_prompt_len", number_field(&CaptionerConfig::max_prompt_len)},
      {"model.contrastive_weight", number_field(&CaptionerConfig::contrastive_weight)},
      {"model.temperature", number_field(&CaptionerConfig::temperature)},
      {"model.beam_width", number_field(&CaptionerConfig::beam_width)},
      {"model.conditioning",
       {[](CaptionerConfig& c, const KeyValueConfig& kv, const std::string& key) {
          const auto v = kv.get_string(key, c.conditioning == Conditioning::kPrefix ? "prefix" : "cross_attention");
          if (v == "prefix")
            c.conditioning = Conditioning::kPrefix;
          else if (v == "cross_attention")
            c.conditioning = Conditioning::kCrossAttention;
          else
            throw InvalidArgument(key + ": expected prefix or cross_attention, got '" + v + "'");
        },
        [](const CaptionerConfig& c) {
          return nlohmann::json(c.conditioning == Conditioning::kPrefix ? "prefix" : "cross_attention");
        },
        [](CaptionerConfig& c, const nlohmann::json& j) {
          c.conditioning = j == "prefix" ? Conditioning::kPrefix : Conditioning::kCrossAttention;
        }}},
      {"model.negatives",
       {[](CaptionerConfig& c, const KeyValueConfig& kv, const std::string& key) {
          const auto v = kv.get_string(key, c.negatives == Negatives::kInBatch ? "in_batch" : "sampled");
          if (v == "in_batch")
            c.negatives = Negatives::kInBatch;
          else if (v == "sampled")
            c.negatives = Negatives::kSampled;
          else
            throw InvalidArgument(key + ": expected in_batch or sampled, got '" + v + "'");
        },
        [](const CaptionerConfig& c) { return nlohmann::json(c.negatives == Negatives::kInBatch ? "in_batch" : "sampled"); },
        [](CaptionerConfig& c, const nlohmann::json& j) {
          c.negatives = j == "in_batch" ? Negatives::kInBatch : Negatives::kSampled;
        }}},
      {"variant",
       {[](CaptionerConfig& c, const KeyValueConfig& kv, const std::string& key) {
          if (auto v = kv.get(key)) c.flags = parse_variant(*v);
        },
        [](const CaptionerConfig& c) { return nlohmann::json(variant_name(c.flags)); },
        [](CaptionerConfig& c, const nlohmann::json& j) { c.flags = parse_variant(j.get<std::string>()); }}},
      {"train.epochs", number_field(&CaptionerConfig::epochs)},
      {"train.batch_size", number_field(&CaptionerConfig::batch_size)},
      {"train.val_batch_size", number_field(&CaptionerConfig::val_batch_size)},
      {"train.lr", number_field(&CaptionerConfig::lr)},
      {"train.weight_decay", number_field(&CaptionerConfig::weight_decay)},
      {"train.grad_clip", number_field(&CaptionerConfig::grad_clip)},
      {"train.warmup_steps", number_field(&CaptionerConfig::warmup_steps)},
      {"train.seed",
       {[](CaptionerConfig& c, const KeyValueConfig& kv, const std::string& key) {
          c.seed = std::uint64_t(kv.get_int(key, (long long)c.seed));
        },
        [](const CaptionerConfig& c) { return nlohmann::json(c.seed); },
        [](CaptionerConfig& c, const nlohmann::json& j) { c.seed = j.get<std::uint64_t>(); }}},
  };
  return f;
}

}  // namespace

CaptionerConfig CaptionerConfig::from_kv(const KeyValueConfig& kv) { return from_kv(kv, CaptionerConfig{}); }

CaptionerConfig CaptionerConfig::from_kv(const KeyValueConfig& kv, CaptionerConfig base) {
  for (const auto& [key, value] : kv.values()) {
    const bool ours = key.starts_with("model.") || key.starts_with("train.");
    if (ours && !fields().contains(key)) throw InvalidArgument("unknown config key '" + key + "'");
  }
  for (const auto& [key, field] : fields())
    if (kv.has(key)) field.read(base, kv, key);
  base.validate();
  return base;
}

nlohmann::json CaptionerConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, field] : fields()) j[key] = field.write(*this);
  return j;
}

CaptionerConfig CaptionerConfig::from_json(const nlohmann::json& j) {
  CaptionerConfig c;
  for (const auto& [key, value] : j.items()) {
    auto it = fields().find(key);
    if (it == fields().end()) throw SchemaError("config." + key + ": unknown key");
    try {
      it->second.from_json(c, value);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("config." + key + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

CaptionerConfig CaptionerConfig::tiny() {
  CaptionerConfig c;
  c.hidden_dim = 16;
  c.map_depth = 1;
  c.map_heads = 2;
  c.text_depth = 1;
  c.text_heads = 2;
  c.pano_depth = 1;
  c.pano_heads = 2;
  c.decoder_depth = 1;
  c.decoder_heads = 2;
  c.max_instruction_len = 40;
  c.batch_size = 4;
  c.val_batch_size = 8;
  c.lr = 1e-3;
  return c;
}

}  // namespace vlgen::captioner
