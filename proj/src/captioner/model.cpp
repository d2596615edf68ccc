#include "vlgen/captioner/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include "vlgen/error.hpp"

namespace vlgen::captioner {

using namespace nn;

Var contrastive_loss_from_logits(Var c_pred) {
  const Eigen::Index b = c_pred.rows();
  if (b < 1 || c_pred.cols() != b) throw InvalidArgument("contrastive loss needs a square similarity matrix");
  std::vector<int> diag(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) diag[std::size_t(i)] = int(i);
  return scale(add(cross_entropy(c_pred, diag), cross_entropy(transpose(c_pred), diag)), 0.5);
}

namespace {

// B x 2 logits: [C(i,i), C(i,neg[i])] per row.
Var positive_negative_pairs(Var c, const std::vector<int>& neg) {
  Tape& t = c.tape();
  const Eigen::Index b = c.rows();
  Matrix pos_mask = Matrix::Identity(b, b), neg_mask = Matrix::Zero(b, b);
  for (Eigen::Index i = 0; i < b; ++i) neg_mask(i, neg[std::size_t(i)]) = 1.0;
  Var ones = t.constant(Matrix::Ones(b, 1));
  Var pos = matmul(mul(c, t.constant(pos_mask)), ones);
  Var negv = matmul(mul(c, t.constant(neg_mask)), ones);
  return transpose(concat_rows({transpose(pos), transpose(negv)}));
}

}  // namespace

Var sampled_contrastive_loss_from_logits(Var c_pred, const std::vector<int>& negatives) {
  const Eigen::Index b = c_pred.rows();
  if (b < 1 || c_pred.cols() != b) throw InvalidArgument("contrastive loss needs a square similarity matrix");
  if (b == 1) return c_pred.tape().constant(Matrix::Zero(1, 1));
  if (Eigen::Index(negatives.size()) != b) throw InvalidArgument("one negative per row required");
  for (Eigen::Index i = 0; i < b; ++i) {
    const int n = negatives[std::size_t(i)];
    if (n < 0 || n >= b || n == i) throw InvalidArgument("negative index must name another batch element");
  }
  const std::vector<int> zeros(static_cast<std::size_t>(b), 0);
  Var rows = cross_entropy(positive_negative_pairs(c_pred, negatives), zeros);
  Var cols = cross_entropy(positive_negative_pairs(transpose(c_pred), negatives), zeros);
  return scale(add(rows, cols), 0.5);
}

CaptionerModel::CaptionerModel(CaptionerConfig config, Vocabulary vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(std::make_unique<ParameterSet>()) {
  config_.validate();
  Rng rng(config_.seed);
  ParameterSet& ps = *params_;
  const int d = config_.hidden_dim;
  const double emb_std = 1.0 / std::sqrt(double(d));

  patch_weight_ = &ps.add("map.patch.weight",
                          normal_matrix(config_.patch_width(), d, std::sqrt(2.0 / (config_.patch_width() + d)), rng));
  patch_bias_ = &ps.add("map.patch.bias", Matrix::Zero(1, d));
  map_pos_ = &ps.add("map.pos", normal_matrix(config_.patch_count(), d, 0.02, rng));
  pool_token_ = &ps.add("map.pool_token", normal_matrix(1, d, emb_std, rng));
  for (int i = 0; i < config_.map_depth; ++i)
    map_blocks_.emplace_back(ps, "map.block" + std::to_string(i), d, config_.map_heads, false, false, rng);
  map_ln_ = LayerNorm(ps, "map.ln", d);
  map_pool_ = MultiHeadAttention(ps, "map.pool", d, config_.map_heads, rng);
  map_out_ln_ = LayerNorm(ps, "map.out_ln", d);

  region_embed_ = Embedding(ps, "region_embed", vocab_.size(), d, rng, emb_std);
  action_embed_ = Embedding(ps, "action_embed", 4, d, rng, emb_std);
  route_ = Lstm(ps, "route", d, d, config_.route_layers, rng);

  const int pp = config_.pano_patch;
  const int pano_tokens = (config_.pano_height / pp) * (config_.pano_width / pp);
  pano_patch_ = Linear(ps, "pano.frozen.patch", pp * pp * 3, d, rng, false);
  pano_pos_ = &ps.add("pano.frozen.pos", normal_matrix(pano_tokens, d, 0.02, rng), false);
  for (int i = 0; i < config_.pano_depth; ++i)
    pano_blocks_.emplace_back(ps, "pano.frozen.block" + std::to_string(i), d, config_.pano_heads, false, false, rng,
                              false);
  pano_ln_ = LayerNorm(ps, "pano.frozen.ln", d, false);
  pano_mlp_ = Mlp(ps, "pano.mlp", d, d, d, rng);

  token_embed_ = Embedding(ps, "decoder.token_embed", vocab_.size(), d, rng, emb_std);
  decoder_pos_ = &ps.add("decoder.pos", normal_matrix(max_positions(), d, 0.02, rng));
  const bool cross = config_.conditioning == captioner::Conditioning::kCrossAttention;
  for (int i = 0; i < config_.decoder_depth; ++i)
    decoder_blocks_.emplace_back(ps, "decoder.block" + std::to_string(i), d, config_.decoder_heads, true, cross, rng);
  decoder_ln_ = LayerNorm(ps, "decoder.ln", d);
  lm_head_ = Linear(ps, "decoder.lm_head", d, vocab_.size(), rng);

  text_pos_ = &ps.add("text.pos", normal_matrix(config_.max_instruction_len + 1, d, 0.02, rng));
  for (int i = 0; i < config_.text_depth; ++i)
    text_blocks_.emplace_back(ps, "text.block" + std::to_string(i), d, config_.text_heads, false, false, rng);
  text_ln_ = LayerNorm(ps, "text.ln", d);
  text_proj_ = Linear(ps, "text.proj", d, d, rng);
  input_proj_ = Linear(ps, "contrastive.input_proj", d, d, rng);
  logit_scale_ = &ps.add("contrastive.logit_scale", Matrix::Constant(1, 1, std::log(1.0 / config_.temperature)));
}

int CaptionerModel::max_positions() const { return config_.max_prompt_len + config_.max_instruction_len + 2; }

CaptionerModel::MapEncoding CaptionerModel::encode_map(Tape& t, const MapPatches& map) const {
  if (map.patch_count != config_.patch_count() || map.patches.cols() != config_.patch_width())
    throw InvalidArgument("map encoder expects " + std::to_string(config_.patch_count()) + " patches of width " +
                          std::to_string(config_.patch_width()) + ", got " + std::to_string(map.patch_count) + " of width " +
                          std::to_string(map.patches.cols()));
  Var emb = sparse_patch_embed(map.patches, map.rows, map.patch_count, t.param(*patch_weight_), t.param(*patch_bias_));
  Var x = concat_rows({t.param(*pool_token_), add(emb, t.param(*map_pos_))});
  for (const auto& block : map_blocks_) x = block(t, x);
  Var h = map_ln_(t, x);
  Var pooled = map_out_ln_(t, add(slice_rows(x, 0, 1), map_pool_(t, slice_rows(h, 0, 1), h, false)));
  return {slice_rows(h, 1, map.patch_count), pooled};
}

Var CaptionerModel::encode_point_context(Tape& t, const std::vector<std::vector<std::vector<int>>>& point_regions,
                                         const std::vector<int>& actions, bool use_regions, bool use_actions) const {
  if (!use_regions && !use_actions) throw InvalidArgument("point context needs regions or actions");
  const std::size_t k = use_actions ? actions.size() : point_regions.size();
  if (use_regions && use_actions && point_regions.size() != actions.size())
    throw InvalidArgument("point context: " + std::to_string(point_regions.size()) + " region lists for " +
                          std::to_string(actions.size()) + " actions");
  if (k == 0) throw InvalidArgument("point context: empty route");
  const int d = config_.hidden_dim;
  std::vector<Var> parts;
  if (use_regions) {
    // Averaging matrix over all region tokens: each region of a point
    // weighs equally, each token within a region weighs equally.
    std::vector<int> ids;
    std::vector<std::tuple<std::size_t, std::size_t, double>> weights;
    for (std::size_t p = 0; p < k; ++p) {
      std::size_t named = 0;
      for (const auto& r : point_regions[p]) named += !r.empty();
      for (const auto& r : point_regions[p])
        for (int id : r) {
          weights.emplace_back(p, ids.size(), 1.0 / double(named * r.size()));
          ids.push_back(id);
        }
    }
    if (ids.empty()) {
      parts.push_back(t.constant(Matrix::Zero(Eigen::Index(k), d)));
    } else {
      Matrix avg = Matrix::Zero(Eigen::Index(k), Eigen::Index(ids.size()));
      for (auto [p, j, w] : weights) avg(Eigen::Index(p), Eigen::Index(j)) = w;
      parts.push_back(matmul(t.constant(std::move(avg)), region_embed_(t, ids)));
    }
  }
  if (use_actions) {
    for (int a : actions)
      if (a < 0 || a > 3) throw InvalidArgument("point context: action id " + std::to_string(a) + " out of range");
    parts.push_back(action_embed_(t, actions));
  }
  return fuse(parts);
}

Var CaptionerModel::encode_route(Tape& t, Var contexts) const { return route_(t, contexts); }

Matrix CaptionerModel::frozen_panorama_features(const Matrix& images) const {
  const int h = config_.pano_height, w = config_.pano_width, p = config_.pano_patch;
  if (images.cols() != h * w * 3)
    throw InvalidArgument("panorama rows must hold " + std::to_string(h * w * 3) + " values");
  const int gh = h / p, gw = w / p;
  Matrix out(images.rows(), config_.hidden_dim);
  for (Eigen::Index k = 0; k < images.rows(); ++k) {
    Matrix patches(gh * gw, p * p * 3);
    for (int py = 0; py < gh; ++py)
      for (int px = 0; px < gw; ++px) {
        Eigen::Index c = 0;
        for (int y = 0; y < p; ++y)
          for (int x = 0; x < p; ++x)
            for (int ch = 0; ch < 3; ++ch)
              patches(py * gw + px, c++) = images(k, ((py * p + y) * w + (px * p + x)) * 3 + ch);
      }
    Tape t(false);
    Var x = add(pano_patch_(t, t.constant(std::move(patches))), t.param(*pano_pos_));
    for (const auto& block : pano_blocks_) x = block(t, x);
    out.row(k) = mean_rows(pano_ln_(t, x)).value();
  }
  return out;
}

Var CaptionerModel::encode_panoramas(Tape& t, const Matrix& images) const {
  if (images.rows() == 0) throw InvalidArgument("panorama encoder: no images");
  return mean_rows(pano_mlp_(t, t.constant(frozen_panorama_features(images))));
}

Var CaptionerModel::fuse(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("fuse: no inputs enabled");
  return parts.size() == 1 ? parts[0] : add_n(parts);
}

CaptionerModel::Conditioning CaptionerModel::condition(Tape& t, const Sample& s) const {
  const auto& f = config_.flags;
  std::vector<Var> parts;
  std::optional<MapEncoding> map;
  if (f.td) {
    map = encode_map(t, s.map);
    parts.push_back(map->pooled);
  }
  if (f.reg || f.act) parts.push_back(encode_route(t, encode_point_context(t, s.point_regions, s.actions, f.reg, f.act)));
  if (f.pano) parts.push_back(encode_panoramas(t, s.panoramas));
  Conditioning c;
  c.fused = fuse(parts);
  if (config_.conditioning == captioner::Conditioning::kCrossAttention)
    c.memory = map ? concat_rows({c.fused, map->patches}) : c.fused;
  return c;
}

Var CaptionerModel::decode(Tape& t, const Conditioning& c, const std::vector<int>& tokens) const {
  if (tokens.empty()) throw InvalidArgument("decode: no tokens");
  const Eigen::Index n = Eigen::Index(tokens.size());
  const bool prefix = config_.conditioning == captioner::Conditioning::kPrefix;
  if (n + (prefix ? 1 : 0) > max_positions())
    throw InvalidArgument("decode: sequence of " + std::to_string(n) + " tokens exceeds the position table");
  Var emb = token_embed_(t, tokens);
  Var pos = t.param(*decoder_pos_);
  Var x = prefix ? add(concat_rows({c.fused, emb}), slice_rows(pos, 0, n + 1)) : add(emb, slice_rows(pos, 0, n));
  for (const auto& block : decoder_blocks_) x = block(t, x, c.memory);
  Var h = decoder_ln_(t, x);
  if (prefix) h = slice_rows(h, 1, n);
  return lm_head_(t, h);
}

void CaptionerModel::teacher_forcing(const std::vector<int>& prompt, const std::vector<int>& target,
                                     std::vector<int>& inputs, std::vector<int>& targets) {
  std::vector<int> full;
  full.push_back(Vocabulary::kBos);
  full.insert(full.end(), prompt.begin(), prompt.end());
  full.insert(full.end(), target.begin(), target.end());
  inputs.assign(full.begin(), full.end() - 1);
  targets.assign(inputs.size(), -1);
  for (std::size_t j = prompt.size(); j < inputs.size(); ++j)
    targets[j] = full[j + 1] == Vocabulary::kPad ? -1 : full[j + 1];
}

Var CaptionerModel::generation_loss(Tape& t, const Conditioning& c, const std::vector<int>& prompt,
                                    const std::vector<int>& target, int* scored) const {
  if (target.empty()) throw InvalidArgument("generation loss: empty target");
  std::vector<int> inputs, targets;
  teacher_forcing(prompt, target, inputs, targets);
  if (scored) *scored = int(std::count_if(targets.begin(), targets.end(), [](int v) { return v >= 0; }));
  return cross_entropy(decode(t, c, inputs), targets);
}

Var CaptionerModel::input_embedding(Tape& t, const Conditioning& c) const { return input_proj_(t, c.fused); }

Var CaptionerModel::text_embedding(Tape& t, const std::vector<int>& target) const {
  std::vector<int> ids{Vocabulary::kBos};
  ids.insert(ids.end(), target.begin(), target.end());
  const Eigen::Index n = std::min<Eigen::Index>(Eigen::Index(ids.size()), text_pos_->value.rows());
  ids.resize(std::size_t(n));
  Var x = add(token_embed_(t, ids), slice_rows(t.param(*text_pos_), 0, n));
  for (const auto& block : text_blocks_) x = block(t, x);
  return text_proj_(t, mean_rows(text_ln_(t, x)));
}

Var CaptionerModel::logit_scale(Tape& t) const { return nn::exp(t.param(*logit_scale_)); }

std::vector<int> CaptionerModel::generate_ids(const Sample& s, bool use_prompt) const {
  Tape t(false);
  const Conditioning c = condition(t, s);
  std::vector<int> head{Vocabulary::kBos};
  if (use_prompt) head.insert(head.end(), s.prompt.begin(), s.prompt.end());
  const int limit = config_.max_instruction_len;

  auto log_probs = [&](const std::vector<int>& generated) {
    std::vector<int> tokens = head;
    tokens.insert(tokens.end(), generated.begin(), generated.end());
    // A fresh tape per step keeps memory flat; conditioning is copied in.
    Tape step(false);
    Conditioning cc{step.constant(c.fused.value()), c.memory.valid() ? step.constant(c.memory.value()) : Var{}};
    const Matrix& logits = decode(step, cc, tokens).value();
    Eigen::RowVectorXd last = logits.row(logits.rows() - 1);
    const double mx = last.maxCoeff();
    const double lse = mx + std::log((last.array() - mx).exp().sum());
    return Eigen::RowVectorXd(last.array() - lse);
  };
  // PAD, BOS and UNK are never emitted.
  auto blocked = [](int id) { return id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kUnk; };

  if (config_.beam_width == 1) {
    std::vector<int> out;
    while (int(out.size()) < limit) {
      const Eigen::RowVectorXd lp = log_probs(out);
      int best = -1;
      for (int v = 0; v < lp.size(); ++v)
        if (!blocked(v) && (best < 0 || lp(v) > lp(best))) best = v;
      if (best == Vocabulary::kEos) break;
      out.push_back(best);
    }
    return out;
  }

  struct Beam {
    std::vector<int> ids;
    double score = 0;
    bool done = false;
  };
  std::vector<Beam> beams{{}};
  const std::size_t width = std::size_t(config_.beam_width);
  for (int step = 0; step < limit; ++step) {
    std::vector<Beam> next;
    bool any_open = false;
    for (const auto& b : beams) {
      if (b.done) {
        next.push_back(b);
        continue;
      }
      any_open = true;
      const Eigen::RowVectorXd lp = log_probs(b.ids);
      for (int v = 0; v < lp.size(); ++v) {
        if (blocked(v)) continue;
        Beam nb = b;
        nb.score += lp(v);
        if (v == Vocabulary::kEos || int(nb.ids.size()) + 1 >= limit) nb.done = true;
        if (v != Vocabulary::kEos) nb.ids.push_back(v);
        next.push_back(std::move(nb));
      }
    }
    if (!any_open) break;
    std::stable_sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) { return a.score > b.score; });
    if (next.size() > width) next.resize(width);
    beams = std::move(next);
  }
  const auto best = std::max_element(beams.begin(), beams.end(), [](const Beam& a, const Beam& b) {
    return a.score / double(a.ids.size() + 1) < b.score / double(b.ids.size() + 1);
  });
  return best->ids;
}

std::string CaptionerModel::generate(const Sample& s, bool use_prompt) const {
  const auto ids = generate_ids(s, use_prompt);
  return vocab_.decode(ids);
}

}  // namespace vlgen::captioner
