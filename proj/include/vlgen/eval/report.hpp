#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vlgen/eval/io.hpp"
#include "vlgen/eval/scorer.hpp"
#include "vlgen/eval/stats.hpp"
#include "vlgen/scene.hpp"

namespace vlgen::eval {

// Symmetric matrix of two-sided permutation p-values; diagonal is 1.
struct PValueMatrix {
  std::vector<std::string> systems;
  std::vector<std::vector<double>> p;

  double at(const std::string& a, const std::string& b) const;
};

// "**" for p <= 0.01, "*" for p <= 0.05, "" otherwise.
std::string significance_stars(double p);

// Pairwise tests between every pair of samples, in the given order.
PValueMatrix pairwise_pvalues(const std::vector<std::pair<std::string, std::vector<double>>>& samples,
                              const PermutationOptions& options = {});

struct ExampleScore {
  std::string episode_id;
  std::string system_id;
  Split split;
  double score;
};

struct SplitScore {
  double mean = 0;
  std::size_t n = 0;
};

struct HumanSummary {
  std::map<std::string, double> mean;  // per system
  std::map<std::string, std::size_t> count;
  std::map<std::string, int> rank;  // 1 = best mean
  PValueMatrix pvalues;
  // Metric vs. mean human score over (episode, system) items, and over
  // per-system means. Absent when undefined (constant input or < 2 items).
  std::optional<double> kendall_tau_items;
  std::optional<double> kendall_tau_systems;
};

struct EvalReport {
  std::string metric;
  std::vector<std::string> systems;  // first-appearance order; the first is the baseline
  std::vector<Split> splits;          // splits present, canonical order
  std::map<std::string, std::map<Split, SplitScore>> scores;
  std::map<Split, PValueMatrix> pvalues;
  std::vector<ExampleScore> examples;
  std::optional<HumanSummary> human;
};

struct EvaluateOptions {
  PermutationOptions permutation;
};

// Scores every generation against its episode's references and assembles
// the report. Throws InvalidArgument when systems cover different episode
// sets, or a generation names an unknown episode.
EvalReport evaluate_systems(const std::vector<Generation>& generations, const std::vector<Episode>& episodes,
                            const Scorer& scorer, const std::optional<std::vector<HumanScore>>& human = std::nullopt,
                            const EvaluateOptions& options = {});

// Lexicon over every region name mentioned by the episodes.
Lexicon lexicon_for(const std::vector<Episode>& episodes);

nlohmann::json to_json(const EvalReport& report);

// Text table: one row per system with per-split means (x100) and stars
// against the baseline, then human mean and rank when present.
std::string render_table(const EvalReport& report);
std::string render_pvalue_matrix(const PValueMatrix& m);

}  // namespace vlgen::eval
