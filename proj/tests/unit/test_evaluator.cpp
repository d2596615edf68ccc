#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "test_support.hpp"
#include "vlgen/error.hpp"
#include "vlgen/eval/io.hpp"
#include "vlgen/eval/propositions.hpp"
#include "vlgen/eval/report.hpp"
#include "vlgen/eval/scorer.hpp"
#include "vlgen/eval/stats.hpp"

using namespace vlgen;
using namespace vlgen::eval;

namespace {

using V = std::vector<std::string>;

Lexicon lex() {
  static const std::vector<std::string> regions = {"kitchen", "living room", "hallway", "bedroom"};
  return Lexicon::standard(regions);
}

// Enumerates every split of the pooled data by bitmask and counts those at
// least as extreme as the observed split.
double brute_permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const int n = int(pooled.size()), na = int(a.size());
  auto stat = [&](unsigned mask) {
    double sa = 0, sb = 0;
    for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? sa : sb) += pooled[i];
    return std::fabs(sa / na - sb / (n - na));
  };
  const double lo = *std::min_element(pooled.begin(), pooled.end());
  const double hi = *std::max_element(pooled.begin(), pooled.end());
  const double tol = 1e-9 * (hi - lo);
  const double observed = stat((1u << na) - 1);
  int total = 0, extreme = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != na) continue;
    ++total;
    if (stat(mask) >= observed - tol) ++extreme;
  }
  return double(extreme) / total;
}

// Tau-b from the pair definition.
double brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double c = 0, d = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) { ++tx; continue; }
      if (dy == 0) { ++ty; continue; }
      (dx * dy > 0 ? c : d) += 1;
    }
  return (c - d) / std::sqrt((c + d + tx) * (c + d + ty));
}

Episode episode(std::string id, Split split, std::vector<std::string> refs) {
  Episode e;
  e.id = std::move(id);
  e.scene_id = "s";
  e.split = split;
  e.references = std::move(refs);
  e.point_regions = {{"kitchen"}, {"hallway"}};
  return e;
}

}  // namespace

TEST(Propositions, EmptyTextGivesEmptySet) { EXPECT_TRUE(extract_propositions("", lex()).empty()); }

TEST(Propositions, HandAppliedRules) {
  const PropositionSet expected = {Proposition::action("left"), Proposition::action("stop"),
                                   Proposition::object("sofa"), Proposition::relation("stop", "sofa")};
  EXPECT_EQ(extract_propositions("turn left and stop at the sofa", lex()), expected);
}

TEST(Propositions, RepeatedMentionIsOneProposition) {
  const auto props = extract_propositions("sofa then sofa, sofa", lex());
  EXPECT_EQ(props, PropositionSet{Proposition::object("sofa")});
}

TEST(Propositions, SynonymsAndMultiWordTerms) {
  const auto props = extract_propositions("Go forward through the living room.", lex());
  EXPECT_TRUE(props.contains(Proposition::action("straight")));
  EXPECT_TRUE(props.contains(Proposition::region("living room")));
  EXPECT_TRUE(props.contains(Proposition::relation("straight", "living room")));
  // Spaced and raw category spellings agree.
  EXPECT_EQ(extract_propositions("the chest of drawers", lex()), extract_propositions("the chest_of_drawers", lex()));
}

TEST(Propositions, RelationsStayInsideClause) {
  const auto props = extract_propositions("turn left, the sofa", lex());
  EXPECT_FALSE(props.contains(Proposition::relation("left", "sofa")));
}

TEST(PropositionF1, IdentityAndDisjoint) {
  const std::vector<std::string> ref = {"turn left into the kitchen and stop near the sofa"};
  EXPECT_DOUBLE_EQ(proposition_f1(ref[0], ref, lex()), 1.0);
  EXPECT_DOUBLE_EQ(proposition_f1("walk past the bed", V{"turn right at the sink"}, lex()), 0.0);
  EXPECT_DOUBLE_EQ(proposition_f1("hello there", V{"nothing here"}, lex()), 1.0);
  EXPECT_DOUBLE_EQ(proposition_f1("hello there", V{"the sofa"}, lex()), 0.0);
}

TEST(PropositionF1, TwoOfFourCorrect) {
  // Candidate: ACTION(left), REGION(kitchen). Reference adds OBJECT(sofa), ACTION(stop).
  const std::vector<std::string> refs = {"left", "kitchen", "sofa", "stop"};
  const auto cand = extract_propositions("left; kitchen", lex());
  ASSERT_EQ(cand.size(), 2u);
  EXPECT_NEAR(proposition_f1("left; kitchen", refs, lex()), 2.0 / 3.0, 1e-12);
}

TEST(PropositionF1, SymmetricUnderSwap) {
  std::mt19937 rng(3);
  const std::vector<std::string> words = {"left", "right", "sofa", "kitchen", "stop", "and", "bed", "then",
                                          "hallway", "go", "straight", ",", "chair", "the"};
  for (int t = 0; t < 200; ++t) {
    std::string a, b;
    for (int i = 0; i < 8; ++i) a += words[rng() % words.size()] + " ";
    for (int i = 0; i < 8; ++i) b += words[rng() % words.size()] + " ";
    EXPECT_NEAR(proposition_f1(a, V{b}, lex()), proposition_f1(b, V{a}, lex()), 1e-12) << a << " | " << b;
  }
}

TEST(PropositionF1, MatchesSetFormula) {
  const PropositionSet c = {Proposition::action("left"), Proposition::object("sofa"), Proposition::object("bed")};
  const PropositionSet r = {Proposition::action("left"), Proposition::object("sofa"), Proposition::region("kitchen"),
                            Proposition::action("stop"), Proposition::object("sink")};
  const double p = 2.0 / 3, rc = 2.0 / 5;
  EXPECT_NEAR(set_f1(c, r), 2 * p * rc / (p + rc), 1e-12);
}

TEST(Bleu, IdentityIsOneAndDisjointIsSmall) {
  const std::string s = "turn left into the kitchen and stop near the sofa";
  EXPECT_NEAR(sentence_bleu(s, {s}), 1.0, 1e-12);
  EXPECT_LT(sentence_bleu("a b c d e", {s}), 0.05);
}

TEST(Bleu, HandComputedSmoothedValue) {
  // cand "a b c d", ref "a b c e": unigram 3/4, bigram (2+1)/(3+1), trigram (1+1)/(2+1), 4-gram (0+1)/(1+1).
  const double expected = std::exp((std::log(0.75) + std::log(0.75) + std::log(2.0 / 3) + std::log(0.5)) / 4);
  EXPECT_NEAR(sentence_bleu("a b c d", {std::string("a b c e")}), expected, 1e-12);
}

TEST(Permutation, IdenticalSamplesGiveOne) {
  const std::vector<double> a = {1, 2};
  EXPECT_DOUBLE_EQ(permutation_test(a, a).p_value, 1.0);
}

TEST(Permutation, PureSplitsExact) {
  const std::vector<double> a = {0, 0, 0}, b = {1, 1, 1};
  const auto r = permutation_test(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.permutations, 20u);
  EXPECT_DOUBLE_EQ(r.p_value, 0.1);
}

TEST(Permutation, ExactMatchesBitmaskEnumeration) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> a(2 + rng() % 5), b(2 + rng() % 5);
    for (auto& x : a) x = std::round(u(rng) * 5);
    for (auto& x : b) x = std::round(u(rng) * 5) + 0.5 * (t % 2);
    const auto r = permutation_test(a, b);
    ASSERT_TRUE(r.exact);
    EXPECT_NEAR(r.p_value, brute_permutation_p(a, b), 1e-12);
  }
}

TEST(Permutation, InvariantToJointShiftAndScale) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(6), b(7);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.4;
    const double p = permutation_test(a, b).p_value;
    for (auto [shift, scale] : {std::pair{3.0, 2.0}, {-10.0, 0.001}, {0.0, 1e4}}) {
      auto ta = a, tb = b;
      for (auto& x : ta) x = scale * x + shift;
      for (auto& x : tb) x = scale * x + shift;
      EXPECT_DOUBLE_EQ(permutation_test(ta, tb).p_value, p);
    }
  }
}

TEST(Permutation, ExactAndMonteCarloAgree) {
  std::mt19937 rng(8);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> a(7), b(7);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng) + 0.3 * t;
    const auto ex = permutation_test(a, b);
    ASSERT_TRUE(ex.exact);
    const auto mc = permutation_test_monte_carlo(a, b, {.resamples = 10000, .seed = 42});
    EXPECT_FALSE(mc.exact);
    EXPECT_NEAR(ex.p_value, mc.p_value, 0.02);
  }
}

TEST(Permutation, MonteCarloAddOneFloor) {
  std::vector<double> a(40, 0.0), b(40, 1.0);
  const auto r = permutation_test(a, b, {.resamples = 999, .seed = 1});
  EXPECT_FALSE(r.exact);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0 / 1000);
}

TEST(Permutation, NullCalibration) {
  std::mt19937 rng(2024);
  std::normal_distribution<double> g(0, 1);
  int rejected = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    if (permutation_test(a, b, {.resamples = 2000, .seed = std::uint64_t(t)}).p_value <= 0.05) ++rejected;
  }
  const double frac = rejected / 1000.0;
  EXPECT_GE(frac, 0.03);
  EXPECT_LE(frac, 0.07);
}

TEST(Permutation, SerialAndParallelCountsMatch) {
  std::mt19937 rng(1);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> pooled(60);
  for (auto& x : pooled) x = g(rng);
  for (double thr : {0.0, 0.1, 0.3, 0.6})
    EXPECT_EQ(serial::count_extreme_resamples(pooled, 25, thr, 5000, 9),
              omp::count_extreme_resamples(pooled, 25, thr, 5000, 9));
}

TEST(Permutation, EmptySampleThrows) {
  const std::vector<double> a = {1}, none;
  EXPECT_THROW(permutation_test(a, none), InvalidArgument);
}

TEST(Kendall, Fixtures) {
  EXPECT_DOUBLE_EQ(kendall_tau(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 4, 6, 8}), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(std::vector<double>{1, 2, 3, 4}, std::vector<double>{4, 3, 2, 1}), -1.0);
  EXPECT_NEAR(kendall_tau(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 2.0 / 3.0, 1e-12);
}

TEST(Kendall, MatchesPairDefinitionWithTies) {
  std::mt19937 rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(3 + rng() % 20), y(x.size());
    for (auto& v : x) v = rng() % 5;
    for (auto& v : y) v = rng() % 11;
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) y[0] += 1;
    EXPECT_NEAR(kendall_tau(x, y), brute_tau_b(x, y), 1e-12);
  }
}

TEST(Kendall, MonotoneTransformInvariance) {
  std::mt19937 rng(6);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = std::round(g(rng) * 2);
    const double tau = kendall_tau(x, y);
    auto fx = x, fy = y;
    for (auto& v : fx) v = std::exp(3 * v);
    for (auto& v : fy) v = v * v * v - 7;
    EXPECT_NEAR(kendall_tau(fx, y), tau, 1e-12);
    EXPECT_NEAR(kendall_tau(x, fy), tau, 1e-12);
  }
}

TEST(Kendall, ConstantOrShortInputThrows) {
  EXPECT_THROW(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), InvalidArgument);
  EXPECT_THROW(kendall_tau(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
  EXPECT_THROW(kendall_tau(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST(HumanScores, RoundTripAndValidation) {
  const std::vector<HumanScore> scores = {{"ep_1", "TD", "e0", 7}, {"ep_1", "GT", "e0", 10}, {"ep,2", "TD", "e1", 0}};
  std::istringstream in(format_human_scores(scores));
  EXPECT_EQ(parse_human_scores(in), scores);
  std::istringstream bad(std::string(kHumanScoresHeader) + "\nep_1,TD,e0,11\n");
  EXPECT_THROW_MSG(parse_human_scores(bad), Error, "score");
  std::istringstream header("episode,system,score\n");
  EXPECT_THROW(parse_human_scores(header), Error);
}

TEST(Generations, JsonlRoundTrip) {
  TempDir dir;
  const std::vector<Generation> gens = {{"ep_1", "TD", "turn left, \"then\" stop"}, {"ep_2", "TD", ""}};
  save_generations(gens, dir.path() / "g.jsonl");
  EXPECT_EQ(load_generations(dir.path() / "g.jsonl"), gens);
}

TEST(ImportedScorer, ReadsExternalScores) {
  TempDir dir;
  std::ofstream(dir.path() / "spice.csv") << "episode_id,system_id,score\nep_1,TD,0.25\nep_2,TD,0.5\n";
  const auto s = ImportedScorer::load(dir.path() / "spice.csv", "spice");
  EXPECT_EQ(s.name(), "spice");
  EXPECT_DOUBLE_EQ(s.score({"ep_2", "TD", "ignored", {}}), 0.5);
  EXPECT_THROW(s.score({"ep_3", "TD", "", {}}), Error);
}

TEST(Report, SingleSystemHasOneRow) {
  const std::vector<Episode> eps = {episode("a", Split::kValSeen, {"turn left"}),
                                    episode("b", Split::kValUnseen, {"stop"})};
  const std::vector<Generation> gens = {{"a", "TD", "turn left"}, {"b", "TD", "go right"}};
  const auto r = evaluate_systems(gens, eps, PropositionF1Scorer(lex()));
  ASSERT_EQ(r.systems.size(), 1u);
  EXPECT_DOUBLE_EQ(r.scores.at("TD").at(Split::kValSeen).mean, 1.0);
  EXPECT_DOUBLE_EQ(r.scores.at("TD").at(Split::kValUnseen).mean, 0.0);
  EXPECT_EQ(r.pvalues.at(Split::kValSeen).p, (std::vector<std::vector<double>>{{1.0}}));
  EXPECT_FALSE(r.human.has_value());
}

TEST(Report, IdenticalSystemsHavePOne) {
  std::vector<Episode> eps;
  std::vector<Generation> gens;
  for (int i = 0; i < 6; ++i) {
    eps.push_back(episode("e" + std::to_string(i), Split::kValSeen, {"turn left into the kitchen"}));
    const std::string text = i % 2 ? "turn left" : "kitchen";
    gens.push_back({eps.back().id, "A", text});
    gens.push_back({eps.back().id, "B", text});
  }
  const auto r = evaluate_systems(gens, eps, PropositionF1Scorer(lex()));
  EXPECT_DOUBLE_EQ(r.pvalues.at(Split::kValSeen).at("A", "B"), 1.0);
}

TEST(Report, EpisodeSetMismatchThrows) {
  const std::vector<Episode> eps = {episode("a", Split::kValSeen, {"x"}), episode("b", Split::kValSeen, {"y"})};
  EXPECT_THROW_MSG(evaluate_systems({{"a", "TD", ""}, {"b", "TD", ""}, {"a", "P", ""}}, eps, BleuScorer()),
                   InvalidArgument, "mismatch");
  EXPECT_THROW(evaluate_systems({{"zz", "TD", ""}}, eps, BleuScorer()), InvalidArgument);
  EXPECT_THROW(evaluate_systems({{"a", "TD", ""}, {"a", "TD", "again"}}, eps, BleuScorer()), InvalidArgument);
}

TEST(Report, FiveSystemStarsFollowPMatrix) {
  std::mt19937 rng(77);
  const std::vector<std::string> systems = {"TD", "P", "P+C", "Reg", "GT"};
  const std::vector<std::string> phrases = {"turn left", "kitchen", "stop near the sofa", "go right", "hallway",
                                            "bed"};
  std::vector<Episode> eps;
  std::vector<Generation> gens;
  std::vector<HumanScore> human;
  for (int i = 0; i < 30; ++i) {
    eps.push_back(episode("e" + std::to_string(i), i < 15 ? Split::kValSeen : Split::kValUnseen,
                          {"turn left into the kitchen and stop near the sofa"}));
    for (std::size_t s = 0; s < systems.size(); ++s) {
      std::string text;
      for (std::size_t k = 0; k < 1 + s; ++k) text += phrases[rng() % phrases.size()] + ", ";
      gens.push_back({eps.back().id, systems[s], text});
      human.push_back({eps.back().id, systems[s], "ev" + std::to_string(i % 5), int(std::min<std::size_t>(10, 2 * s + rng() % 3))});
    }
  }
  const auto r = evaluate_systems(gens, eps, PropositionF1Scorer(lex()), human);
  const auto doc = to_json(r);
  for (auto split : r.splits) {
    const auto& m = r.pvalues.at(split);
    for (std::size_t i = 0; i < m.p.size(); ++i) {
      EXPECT_EQ(m.p[i][i], 1.0);
      for (std::size_t j = 0; j < m.p.size(); ++j) EXPECT_EQ(m.p[i][j], m.p[j][i]);
    }
  }
  int starred = 0;
  for (const auto& row : doc["systems"]) {
    for (const auto& [split, entry] : row["scores"].items()) {
      if (!entry.contains("p_vs_baseline")) continue;
      const double p = entry["p_vs_baseline"];
      const std::string want = p <= 0.01 ? "**" : p <= 0.05 ? "*" : "";
      EXPECT_EQ(entry["stars"].get<std::string>(), want);
      starred += !want.empty();
    }
  }
  EXPECT_GT(starred, 0);
  ASSERT_TRUE(r.human.has_value());
  EXPECT_EQ(r.human->rank.at("GT"), 1);
  ASSERT_TRUE(r.human->kendall_tau_systems.has_value());
  const std::string table = render_table(r);
  EXPECT_NE(table.find("val_seen"), std::string::npos);
  EXPECT_NE(table.find("GT"), std::string::npos);
  EXPECT_NE(table.find("(1)"), std::string::npos);
}
