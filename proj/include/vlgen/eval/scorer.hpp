#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vlgen/eval/propositions.hpp"

namespace vlgen::eval {

struct ScoringItem {
  std::string episode_id;
  std::string system_id;
  std::string candidate;
  std::vector<std::string> references;
};

// Per-example automatic metric. Implementations are pure.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual double score(const ScoringItem& item) const = 0;
};

// Rule-based semantic proposition F1.
class PropositionF1Scorer : public Scorer {
 public:
  explicit PropositionF1Scorer(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  std::string name() const override { return "proposition_f1"; }
  double score(const ScoringItem& item) const override;
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  Lexicon lexicon_;
};

// Sentence BLEU-4 with add-one smoothing for n > 1 and clipped counts over
// all references; brevity penalty against the closest reference length.
double sentence_bleu(const std::string& candidate, const std::vector<std::string>& references, int max_order = 4);

class BleuScorer : public Scorer {
 public:
  std::string name() const override { return "bleu"; }
  double score(const ScoringItem& item) const override { return sentence_bleu(item.candidate, item.references); }
};

// Scores computed elsewhere (e.g. an external SPICE run), read from a CSV
// with header episode_id,system_id,score.
class ImportedScorer : public Scorer {
 public:
  static ImportedScorer load(const std::filesystem::path& csv, std::string name = "imported");
  std::string name() const override { return name_; }
  double score(const ScoringItem& item) const override;

 private:
  std::string name_;
  std::map<std::pair<std::string, std::string>, double> scores_;
};

}  // namespace vlgen::eval
