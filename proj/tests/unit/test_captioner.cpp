#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "test_support.hpp"
#include "vlgen/captioner/checkpoint.hpp"
#include "vlgen/captioner/trainer.hpp"
#include "vlgen/dataset.hpp"
#include "vlgen/error.hpp"
#include "vlgen/kv_config.hpp"
#include "vlgen/nn/optim.hpp"

namespace vlgen::captioner {
namespace {

using nn::Matrix;

// Four synthetic episodes with panoramas, shared by the suite.
class CaptionerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    CorpusSpec spec;
    spec.num_scenes = 4;
    spec.unseen_fraction = 0;
    spec.val_seen_fraction = 0;
    EpisodeOptions options;
    options.panoramas = true;
    episodes_ = new std::vector<Episode>(build_synthetic_corpus(7, spec, dir_->path(), options).episodes);
    vocab_ = new Vocabulary(build_vocabulary(*episodes_));
  }
  static void TearDownTestSuite() {
    delete vocab_;
    delete episodes_;
    delete dir_;
  }

  static CaptionerConfig config(const std::string& variant, int map_depth = 0) {
    CaptionerConfig c = CaptionerConfig::tiny();
    c.map_depth = map_depth;
    c.flags = parse_variant(variant);
    return c;
  }
  static std::vector<Sample> samples(const CaptionerConfig& c) {
    SampleOptions o;
    o.load_panoramas = c.flags.pano;
    return prepare_samples(*episodes_, dir_->path(), *vocab_, c, o);
  }
  static std::vector<const Sample*> pointers(const std::vector<Sample>& s) {
    std::vector<const Sample*> out;
    for (const auto& x : s) out.push_back(&x);
    return out;
  }

  static TempDir* dir_;
  static std::vector<Episode>* episodes_;
  static Vocabulary* vocab_;
};
TempDir* CaptionerTest::dir_ = nullptr;
std::vector<Episode>* CaptionerTest::episodes_ = nullptr;
Vocabulary* CaptionerTest::vocab_ = nullptr;

// Symmetric CE computed directly from the definition.
double symmetric_ce_oracle(const Matrix& c) {
  const Eigen::Index b = c.rows();
  double rows = 0, cols = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    double zr = 0, zc = 0;
    for (Eigen::Index j = 0; j < b; ++j) {
      zr += std::exp(c(i, j));
      zc += std::exp(c(j, i));
    }
    rows += std::log(zr) - c(i, i);
    cols += std::log(zc) - c(i, i);
  }
  return 0.5 * (rows + cols) / double(b);
}

double contrastive_of(const Matrix& m) {
  nn::Tape t(false);
  return contrastive_loss_from_logits(t.constant(m)).scalar();
}

TEST(ContrastiveLoss, SingletonBatchIsExactlyZero) {
  for (double v : {-3.0, 0.0, 12.5}) EXPECT_EQ(contrastive_of(Matrix::Constant(1, 1, v)), 0.0);
  nn::Tape t(false);
  EXPECT_EQ(sampled_contrastive_loss_from_logits(t.constant(Matrix::Constant(1, 1, 4.0)), {}).scalar(), 0.0);
}

TEST(ContrastiveLoss, UniformLogitsGiveLogB) {
  for (int b : {2, 4, 8}) EXPECT_NEAR(contrastive_of(Matrix::Constant(b, b, 0.37)), std::log(double(b)), 1e-12);
}

TEST(ContrastiveLoss, DiagonalTenMatchesClosedForm) {
  Matrix m = Matrix::Zero(2, 2);
  m.diagonal().setConstant(10.0);
  // -log(e^10 / (e^10 + 1)) per row and column.
  EXPECT_NEAR(contrastive_of(m), std::log1p(std::exp(-10.0)), 1e-9);
  EXPECT_NEAR(contrastive_of(m), 4.54e-5, 1e-7);
}

TEST(ContrastiveLoss, MatchesDefinitionOnRandomMatrices) {
  std::mt19937_64 rng(3);
  for (int b = 1; b <= 6; ++b) {
    Matrix m = nn::normal_matrix(b, b, 2.0, rng);
    EXPECT_NEAR(contrastive_of(m), symmetric_ce_oracle(m), 1e-12);
  }
}

TEST(ContrastiveLoss, SampledNegativesWithTwoElementsEqualInBatch) {
  std::mt19937_64 rng(5);
  Matrix m = nn::normal_matrix(2, 2, 1.0, rng);
  nn::Tape t(false);
  EXPECT_NEAR(sampled_contrastive_loss_from_logits(t.constant(m), {1, 0}).scalar(), contrastive_of(m), 1e-12);
  EXPECT_THROW(sampled_contrastive_loss_from_logits(t.constant(m), {0, 0}), InvalidArgument);
}

TEST(ContrastiveLoss, ZeroNormEmbeddingIsAnError) {
  nn::Tape t(false);
  EXPECT_THROW(nn::l2_normalize_rows(t.constant(Matrix::Zero(2, 4))), InvalidArgument);
}

TEST(GenerationLoss, PerfectLogitsApproachZero) {
  nn::Tape t(false);
  Matrix logits = Matrix::Zero(3, 20);
  const std::vector<int> targets{4, 7, 19};
  for (int i = 0; i < 3; ++i) logits(i, targets[std::size_t(i)]) = 50.0;
  EXPECT_LT(nn::cross_entropy(t.constant(logits), targets).scalar(), 1e-9);
}

TEST_F(CaptionerTest, GenerationLossIsLogVUnderUniformLogits) {
  CaptionerModel model(config("TD"), *vocab_);
  model.params().get("decoder.lm_head.weight").value.setZero();
  model.params().get("decoder.lm_head.bias").value.setZero();
  const auto s = samples(model.config());
  nn::Tape t(false);
  const auto c = model.condition(t, s[0]);
  EXPECT_NEAR(model.generation_loss(t, c, {}, {Vocabulary::kEos}).scalar(), std::log(double(vocab_->size())), 1e-12);
  EXPECT_NEAR(model.generation_loss(t, c, s[0].prompt, s[0].target).scalar(), std::log(double(vocab_->size())),
              1e-12);
  EXPECT_THROW(model.generation_loss(t, c, {}, {}), InvalidArgument);
}

TEST(TeacherForcing, PromptPositionsAreNeverScored) {
  std::vector<int> inputs, targets;
  CaptionerModel::teacher_forcing({10, 11, 12}, {20, 21, Vocabulary::kEos}, inputs, targets);
  EXPECT_EQ(inputs, (std::vector<int>{Vocabulary::kBos, 10, 11, 12, 20, 21}));
  EXPECT_EQ(targets, (std::vector<int>{-1, -1, -1, 20, 21, Vocabulary::kEos}));
  CaptionerModel::teacher_forcing({}, {20, Vocabulary::kEos}, inputs, targets);
  EXPECT_EQ(inputs, (std::vector<int>{Vocabulary::kBos, 20}));
  EXPECT_EQ(targets, (std::vector<int>{20, Vocabulary::kEos}));
}

TEST_F(CaptionerTest, PromptChangesLossOnlyThroughConditioning) {
  CaptionerModel model(config("TD+P"), *vocab_);
  const auto s = samples(model.config());
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> word(4, vocab_->size() - 1);
  for (const auto& sample : s) {
    nn::Tape t(false);
    const auto c = model.condition(t, sample);
    int scored = 0;
    const double loss = model.generation_loss(t, c, sample.prompt, sample.target, &scored).scalar();
    EXPECT_EQ(scored, int(sample.target.size()));

    // Masked loss recomputed from the logits: only rows predicting target
    // tokens count. An unmasked loss over every position differs.
    std::vector<int> inputs{Vocabulary::kBos};
    inputs.insert(inputs.end(), sample.prompt.begin(), sample.prompt.end());
    inputs.insert(inputs.end(), sample.target.begin(), sample.target.end() - 1);
    const Matrix& logits = model.decode(t, c, inputs).value();
    std::vector<int> next(inputs.begin() + 1, inputs.end());
    next.push_back(sample.target.back());
    double masked = 0, unmasked = 0;
    for (std::size_t j = 0; j < next.size(); ++j) {
      const auto row = logits.row(Eigen::Index(j));
      const double mx = row.maxCoeff();
      const double nll = mx + std::log((row.array() - mx).exp().sum()) - row(next[j]);
      unmasked += nll / double(next.size());
      if (j >= sample.prompt.size()) masked += nll / double(sample.target.size());
    }
    EXPECT_NEAR(loss, masked, 1e-10);
    EXPECT_GT(std::abs(loss - unmasked), 1e-6);

    // Rewriting the prompt ids keeps the scored count.
    std::vector<int> other = sample.prompt;
    for (int& id : other) id = word(rng);
    int scored_other = 0;
    model.generation_loss(t, c, other, sample.target, &scored_other);
    EXPECT_EQ(scored_other, scored);
  }
}

TEST_F(CaptionerTest, MapEncoderShapesAndNonDegeneracy) {
  CaptionerModel model(config("TD", 1), *vocab_);
  const RgbImage demo = read_png(dir_->path() / (*episodes_)[0].map_image_path);
  const MapPatches patches = patchify_map(demo, 384, 16);
  EXPECT_EQ(patches.patch_count, 576);
  const MapPatches black = patchify_map(RgbImage(384, 384), 384, 16);
  EXPECT_TRUE(black.rows.empty());

  nn::Tape t(false);
  const auto a = model.encode_map(t, patches);
  const auto b = model.encode_map(t, black);
  const auto a2 = model.encode_map(t, patches);
  EXPECT_EQ(a.patches.rows(), 576);
  EXPECT_EQ(a.patches.cols(), 16);
  EXPECT_EQ(a.pooled.rows(), 1);
  EXPECT_GT((a.pooled.value() - b.pooled.value()).norm(), 1e-3);
  EXPECT_EQ(a.pooled.value(), a2.pooled.value());
  EXPECT_THROW(patchify_map(RgbImage(200, 384), 384, 16), InvalidArgument);
  MapPatches wrong = patches;
  wrong.patch_count = 100;
  EXPECT_THROW(model.encode_map(t, wrong), InvalidArgument);
}

TEST_F(CaptionerTest, PointContextExamples) {
  CaptionerModel model(config("TD+Reg+Act"), *vocab_);
  const Matrix& words = model.params().get("region_embed.weight").value;
  const Matrix& acts = model.params().get("action_embed.weight").value;
  const int living = vocab_->id("living"), room = vocab_->id("room");
  ASSERT_NE(living, Vocabulary::kUnk);
  ASSERT_NE(room, Vocabulary::kUnk);
  nn::Tape t(false);

  const Matrix none = model.encode_point_context(t, {{}}, {2}).value();
  EXPECT_TRUE(none.isApprox(acts.row(2)));

  const Matrix one = model.encode_point_context(t, {{{living, room}}}, {1}).value();
  EXPECT_TRUE(one.isApprox(0.5 * (words.row(living) + words.row(room)) + acts.row(1), 1e-14));

  const Matrix swapped = model.encode_point_context(t, {{{room, living}}}, {1}).value();
  EXPECT_TRUE(one.isApprox(swapped, 1e-14));

  const Matrix actions_only = model.encode_point_context(t, {{{living, room}}}, {1}, false, true).value();
  EXPECT_TRUE(actions_only.isApprox(acts.row(1)));

  EXPECT_THROW(model.encode_point_context(t, {{}, {}}, {1}), InvalidArgument);
  EXPECT_THROW(model.encode_point_context(t, {{}}, {4}), InvalidArgument);
}

// One LSTM step from zero state, by hand, through every layer.
Matrix lstm_single_step(const nn::ParameterSet& ps, const Matrix& x, int layers) {
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Matrix in = x;
  for (int l = 0; l < layers; ++l) {
    const std::string p = "route.layer" + std::to_string(l) + ".input";
    const Matrix z = in * ps.get(p + ".weight").value + ps.get(p + ".bias").value;
    const Eigen::Index d = z.cols() / 4;
    Matrix h(1, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double i = sigmoid(z(0, j)), g = std::tanh(z(0, 2 * d + j)), o = sigmoid(z(0, 3 * d + j));
      h(0, j) = o * std::tanh(i * g);
    }
    in = h;
  }
  return in;
}

TEST_F(CaptionerTest, RouteEncoderSingleStepAndOrder) {
  CaptionerModel model(config("TD+Reg+Act"), *vocab_);
  std::mt19937_64 rng(2);
  const Matrix x = nn::normal_matrix(1, 16, 1.0, rng);
  nn::Tape t(false);
  const Matrix got = model.encode_route(t, t.constant(x)).value();
  EXPECT_TRUE(got.isApprox(lstm_single_step(model.params(), x, model.config().route_layers), 1e-12));

  const Matrix seq = nn::normal_matrix(4, 16, 1.0, rng);
  const Matrix reversed = seq.colwise().reverse();
  const Matrix fwd = model.encode_route(t, t.constant(seq)).value();
  EXPECT_GT((fwd - model.encode_route(t, t.constant(reversed)).value()).norm(), 1e-6);
  EXPECT_EQ(fwd, model.encode_route(t, t.constant(seq)).value());
  EXPECT_THROW(model.encode_route(t, t.constant(Matrix(0, 16))), InvalidArgument);
}

TEST_F(CaptionerTest, PanoramaMeanIsOrderFree) {
  CaptionerModel model(config("TD+Reg+Act+Pano"), *vocab_);
  const auto s = samples(model.config());
  const Matrix& images = s[0].panoramas;
  ASSERT_GE(images.rows(), 2);
  nn::Tape t(false);
  const Matrix single = model.encode_panoramas(t, images.topRows(1)).value();
  const Matrix repeated = model.encode_panoramas(t, images.topRows(1).replicate(3, 1)).value();
  EXPECT_TRUE(single.isApprox(repeated, 1e-12));
  const Matrix reversed = images.colwise().reverse();
  EXPECT_TRUE(model.encode_panoramas(t, images).value().isApprox(model.encode_panoramas(t, reversed).value(), 1e-12));
  EXPECT_THROW(model.encode_panoramas(t, Matrix(0, images.cols())), InvalidArgument);
}

TEST_F(CaptionerTest, FusionSumsEnabledParts) {
  const auto td_cfg = config("TD+Reg+Act");
  CaptionerModel model(td_cfg, *vocab_);
  const auto s = samples(td_cfg);
  nn::Tape t(false);
  const auto map = model.encode_map(t, s[0].map);
  const auto route = model.encode_route(t, model.encode_point_context(t, s[0].point_regions, s[0].actions));
  EXPECT_TRUE(model.condition(t, s[0]).fused.value().isApprox(map.pooled.value() + route.value(), 1e-14));

  model.mutable_config().flags = parse_variant("TD");
  EXPECT_EQ(model.condition(t, s[0]).fused.value(), map.pooled.value());
  EXPECT_EQ(CaptionerModel::fuse({map.pooled, route}).value(), CaptionerModel::fuse({route, map.pooled}).value());
  EXPECT_THROW(CaptionerModel::fuse({}), InvalidArgument);
}

// Central differences on the total batch loss.
TEST_F(CaptionerTest, GradientCheckOnRandomParameters) {
  auto cfg = config("TD+Reg+Act+Pano+P+C", 1);
  cfg.contrastive_weight = 0.5;
  CaptionerModel model(cfg, *vocab_);
  const auto s = samples(cfg);
  const auto batch = pointers(s);

  model.params().zero_grad();
  batch_loss(model, batch, true);
  auto params = model.params().trainable();
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> pick_param(0, params.size() - 1);
  int checked = 0, draws = 0;
  while (checked < 10) {
    ASSERT_LT(++draws, 2000) << "too few parameters with a measurable gradient";
    nn::Parameter* p = params[pick_param(rng)];
    std::uniform_int_distribution<Eigen::Index> pick_entry(0, p->value.size() - 1);
    const Eigen::Index k = pick_entry(rng);
    const double analytic = p->grad.data()[k];
    const double h = 1e-5, saved = p->value.data()[k];
    p->value.data()[k] = saved + h;
    const double up = batch_loss(model, batch, false).total();
    p->value.data()[k] = saved - h;
    const double down = batch_loss(model, batch, false).total();
    p->value.data()[k] = saved;
    const double numeric = (up - down) / (2 * h);
    // Entries with no measurable gradient (unused embedding rows) say
    // nothing about the backward pass.
    if (std::max(std::abs(analytic), std::abs(numeric)) < 1e-6) continue;
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric));
    EXPECT_LT(rel, 1e-3) << p->name << "[" << k << "] analytic " << analytic << " numeric " << numeric;
    ++checked;
  }
}

TEST_F(CaptionerTest, TopDownOnlyGivesZeroGradientElsewhere) {
  CaptionerModel model(config("TD"), *vocab_);
  auto s = samples(config("TD+Reg+Act+Pano"));
  model.params().zero_grad();
  batch_loss(model, pointers(s), true);
  double map_norm = 0;
  for (const nn::Parameter* p : std::as_const(model.params()).all()) {
    const std::string& n = p->name;
    if (n.starts_with(kRegionPrefix) || n.starts_with(kActionPrefix) || n.starts_with(kRoutePrefix) ||
        n.starts_with(kPanoFrozenPrefix) || n.starts_with(kPanoMlpPrefix)) {
      EXPECT_TRUE((p->grad.array() == 0.0).all()) << n;
    }
    if (n.starts_with(kMapPrefix)) map_norm += p->grad.squaredNorm();
  }
  EXPECT_GT(map_norm, 0.0);
}

TEST_F(CaptionerTest, FrozenPanoramaEncoderSurvivesOptimizerSteps) {
  auto cfg = config("TD+Reg+Act+Pano+P+C");
  CaptionerModel model(cfg, *vocab_);
  const auto s = samples(cfg);
  const auto batch = pointers(s);
  const auto frozen_before = model.params().checksum(kPanoFrozenPrefix);
  const auto mlp_before = model.params().checksum(kPanoMlpPrefix);
  nn::AdamW opt(model.params(), {.lr = 1e-3});
  for (int step = 0; step < 100; ++step) {
    model.params().zero_grad();
    batch_loss(model, batch, true);
    nn::clip_grad_norm(model.params(), 1.0);
    opt.step(1e-3);
    if (step == 0) EXPECT_NE(model.params().checksum(kPanoMlpPrefix), mlp_before);
  }
  EXPECT_EQ(model.params().checksum(kPanoFrozenPrefix), frozen_before);
  EXPECT_NE(model.params().checksum(kPanoMlpPrefix), mlp_before);
  for (const nn::Parameter* p : std::as_const(model.params()).all())
    if (p->name.starts_with(kPanoFrozenPrefix)) EXPECT_FALSE(p->trainable) << p->name;
}

TEST_F(CaptionerTest, TrainingIsDeterministicAndLossDecreases) {
  auto cfg = config("TD+Reg+Act");
  cfg.epochs = 5;
  cfg.lr = 3e-3;
  const auto s = samples(cfg);
  CaptionerModel a(cfg, *vocab_), b(cfg, *vocab_);
  EXPECT_EQ(a.params().checksum(), b.params().checksum());
  const auto ra = train(a, s, s);
  const auto rb = train(b, s, s);
  ASSERT_EQ(ra.history.size(), 5u);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_EQ(ra.history[e].gen_loss, rb.history[e].gen_loss);
    EXPECT_EQ(ra.history[e].val_loss, rb.history[e].val_loss);
    if (e) EXPECT_LT(ra.history[e].gen_loss, ra.history[e - 1].gen_loss);
  }
  EXPECT_EQ(a.params().checksum(), b.params().checksum());
  EXPECT_EQ(a.generate(s[0], false), b.generate(s[0], false));
  EXPECT_EQ(a.generate(s[0], false), a.generate(s[0], false));
  EXPECT_THROW(train(a, {}, s), InvalidArgument);
}

TEST_F(CaptionerTest, ZeroContrastiveWeightMatchesDisabledObjective) {
  auto off = config("TD+Reg+Act+P");
  auto on = config("TD+Reg+Act+P+C");
  on.contrastive_weight = 0.0;
  off.epochs = on.epochs = 3;
  const auto s = samples(off);
  CaptionerModel a(off, *vocab_), b(on, *vocab_);
  const auto ra = train(a, s, s);
  const auto rb = train(b, s, s);
  for (std::size_t e = 0; e < ra.history.size(); ++e) {
    EXPECT_EQ(ra.history[e].gen_loss, rb.history[e].gen_loss);
    EXPECT_EQ(ra.history[e].val_loss, rb.history[e].val_loss);
    EXPECT_EQ(ra.history[e].con_loss, 0.0);
    EXPECT_GT(rb.history[e].con_loss, 0.0);
  }
  EXPECT_EQ(a.params().checksum(), b.params().checksum());
}

TEST_F(CaptionerTest, TrainedModelPrefersCorrectPairing) {
  auto cfg = config("TD+Reg+Act+P+C");
  cfg.epochs = 30;
  cfg.lr = 3e-3;
  cfg.contrastive_weight = 1.0;
  const auto s = samples(cfg);
  CaptionerModel model(cfg, *vocab_);
  train(model, s, {});
  nn::Tape t(false);
  std::vector<nn::Var> in, text;
  for (const auto& x : s) {
    in.push_back(model.input_embedding(t, model.condition(t, x)));
    text.push_back(model.text_embedding(t, x.target));
  }
  auto loss_for = [&](std::vector<nn::Var> texts) {
    nn::Var sim = nn::matmul(nn::l2_normalize_rows(nn::concat_rows(in)),
                             nn::transpose(nn::l2_normalize_rows(nn::concat_rows(texts))));
    return contrastive_loss_from_logits(nn::scale_by(sim, model.logit_scale(t))).scalar();
  };
  const double correct = loss_for(text);
  std::vector<nn::Var> rotated(text.begin() + 1, text.end());
  rotated.push_back(text.front());
  EXPECT_GE(loss_for(rotated), correct);
  std::vector<nn::Var> reversed(text.rbegin(), text.rend());
  EXPECT_GE(loss_for(reversed), correct);
}

TEST_F(CaptionerTest, MetricsCsvAndBestCheckpoint) {
  auto cfg = config("TD");
  cfg.epochs = 3;
  const auto s = samples(cfg);
  CaptionerModel model(cfg, *vocab_);
  TempDir out;
  TrainOptions options;
  options.metrics_csv = out.path() / "metrics.csv";
  options.checkpoint = out.path() / "model.ckpt";
  const auto r = train(model, s, s, options);
  std::ifstream in(options.metrics_csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,gen_loss,con_loss,val_loss");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  double best = r.history[0].val_loss;
  for (const auto& m : r.history) best = std::min(best, m.val_loss);
  EXPECT_EQ(r.best_val, best);
  EXPECT_DOUBLE_EQ(evaluate_loss(model, s).total(), best);
  const auto loaded = load_checkpoint(options.checkpoint);
  EXPECT_EQ(loaded->params().checksum(), model.params().checksum());
}

TEST_F(CaptionerTest, CheckpointRoundTrip) {
  auto cfg = config("TD+Reg+Act+Pano+P+C");
  cfg.seed = 99;
  cfg.beam_width = 3;
  CaptionerModel model(cfg, *vocab_);
  const auto s = samples(cfg);
  TempDir out;
  const auto path = out.path() / "m.ckpt";
  save_checkpoint(model, path);
  const auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded->params().checksum(), model.params().checksum());
  EXPECT_EQ(loaded->vocab(), model.vocab());
  EXPECT_EQ(loaded->config().flags, cfg.flags);
  EXPECT_EQ(loaded->config().seed, 99u);
  EXPECT_EQ(loaded->config().beam_width, 3);
  EXPECT_EQ(loaded->generate(s[0], true), model.generate(s[0], true));

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 5);
  EXPECT_THROW(load_checkpoint(path), SchemaError);
  std::ofstream(path) << "garbage";
  EXPECT_THROW(load_checkpoint(path), SchemaError);
}

TEST_F(CaptionerTest, PromptedGenerationExcludesTemplateHead) {
  auto cfg = config("TD+Reg+Act+P");
  cfg.epochs = 3;
  const auto s = samples(cfg);
  CaptionerModel model(cfg, *vocab_);
  train(model, s, {});
  const std::string head = "starting from the dark yellow point";
  for (const auto& x : s) {
    ASSERT_FALSE(x.prompt.empty());
    const auto ids = model.generate_ids(x, true);
    EXPECT_LE(int(ids.size()), cfg.max_instruction_len);
    const std::string out = model.generate(x, true);
    EXPECT_EQ(out.find(head), std::string::npos) << out;
    EXPECT_EQ(out.find("Starting from the dark yellow point"), std::string::npos) << out;
  }
}

TEST_F(CaptionerTest, BeamSearchWidthOneIsGreedy) {
  auto cfg = config("TD+Reg+Act");
  cfg.epochs = 2;
  const auto s = samples(cfg);
  CaptionerModel model(cfg, *vocab_);
  train(model, s, {});
  const auto greedy = model.generate_ids(s[0], false);
  model.mutable_config().beam_width = 4;
  const auto beam = model.generate_ids(s[0], false);
  EXPECT_LE(int(beam.size()), cfg.max_instruction_len);
  EXPECT_EQ(model.generate_ids(s[0], false), beam);
  model.mutable_config().beam_width = 1;
  EXPECT_EQ(model.generate_ids(s[0], false), greedy);
}

TEST(CaptionerConfig, NineVariantsRoundTrip) {
  const auto names = variant_names();
  ASSERT_EQ(names.size(), 9u);
  std::set<std::string> seen;
  for (const auto& n : names) {
    const VariantFlags f = parse_variant(n);
    EXPECT_EQ(variant_name(f), n);
    EXPECT_TRUE(f.td);
    seen.insert(n);
  }
  EXPECT_EQ(seen.size(), 9u);
  EXPECT_THROW(parse_variant("Reg+Act"), InvalidArgument);
  EXPECT_THROW(parse_variant("TD+Act+Reg"), InvalidArgument);
  EXPECT_THROW(parse_variant("TD+Foo"), InvalidArgument);
}

TEST(CaptionerConfig, KeyValueFileAndValidation) {
  const auto kv = KeyValueConfig::parse(
      "variant = TD+Reg+Act+P\n"
      "model.hidden_dim = 32\n"
      "model.contrastive_weight = 0.25\n"
      "train.epochs = 7\n"
      "train.lr = 0.002\n"
      "paths.output = runs/x\n");
  const auto c = CaptionerConfig::from_kv(kv);
  EXPECT_EQ(c.hidden_dim, 32);
  EXPECT_EQ(c.contrastive_weight, 0.25);
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.lr, 0.002);
  EXPECT_EQ(c.flags, parse_variant("TD+Reg+Act+P"));
  EXPECT_EQ(CaptionerConfig::from_json(c.to_json()).to_json(), c.to_json());

  EXPECT_THROW_MSG(CaptionerConfig::from_kv(KeyValueConfig::parse("model.hidden = 3\n")), InvalidArgument,
                   "model.hidden");
  EXPECT_THROW_MSG(CaptionerConfig::from_kv(KeyValueConfig::parse("model.patch_size = 7\n")), InvalidArgument,
                   "patch_size");
  EXPECT_THROW_MSG(CaptionerConfig::from_kv(KeyValueConfig::parse("model.contrastive_weight = -1\n")),
                   InvalidArgument, "contrastive_weight");
}

TEST(VocabularyTest, SpecialsAndRoundTrip) {
  const std::vector<std::string> texts{"Walk past the sofa, then stop.", "turn left"};
  const Vocabulary v = Vocabulary::build(texts);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.token(Vocabulary::kBos), "<bos>");
  EXPECT_EQ(v.token(Vocabulary::kEos), "<eos>");
  EXPECT_EQ(v.token(Vocabulary::kUnk), "<unk>");
  EXPECT_EQ(v.decode(v.encode("Walk past the sofa, then stop.")), "walk past the sofa, then stop.");
  EXPECT_EQ(v.encode("zebra"), std::vector<int>{Vocabulary::kUnk});
  for (int id = 0; id < v.size(); ++id) EXPECT_EQ(v.id(v.token(id)), id);
  EXPECT_EQ(Vocabulary::from_json(v.to_json()), v);
  EXPECT_EQ(tokenize("Go left."), (std::vector<std::string>{"go", "left", "."}));
}

}  // namespace
}  // namespace vlgen::captioner
