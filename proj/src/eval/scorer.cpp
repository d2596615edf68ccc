#include "vlgen/eval/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "vlgen/error.hpp"
#include "vlgen/eval/io.hpp"

namespace vlgen::eval {

double PropositionF1Scorer::score(const ScoringItem& item) const {
  return proposition_f1(item.candidate, item.references, lexicon_);
}

namespace {

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::map<std::vector<std::string>, int> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

}  // namespace

double sentence_bleu(const std::string& candidate, const std::vector<std::string>& references, int max_order) {
  const auto cand = tokenize_for_eval(candidate);
  if (cand.empty() || references.empty()) return 0.0;
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(tokenize_for_eval(r));

  double log_sum = 0;
  for (int n = 1; n <= max_order; ++n) {
    auto counts = ngram_counts(cand, n);
    std::map<std::vector<std::string>, int> max_ref;
    for (const auto& r : refs)
      for (const auto& [g, c] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], c);
    double matched = 0, total = 0;
    for (const auto& [g, c] : counts) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    if (n > 1) {
      matched += 1;
      total += 1;
    }
    if (matched == 0 || total == 0) return 0.0;
    log_sum += std::log(matched / total) / max_order;
  }
  std::size_t closest = refs.front().size();
  for (const auto& r : refs) {
    const auto d = std::abs(double(r.size()) - double(cand.size()));
    const auto best = std::abs(double(closest) - double(cand.size()));
    if (d < best || (d == best && r.size() < closest)) closest = r.size();
  }
  const double bp = cand.size() >= closest ? 1.0 : std::exp(1.0 - double(closest) / double(cand.size()));
  return bp * std::exp(log_sum);
}

ImportedScorer ImportedScorer::load(const std::filesystem::path& csv, std::string name) {
  std::ifstream in(csv);
  if (!in) throw Error("cannot open score file " + csv.string());
  ImportedScorer s;
  s.name_ = std::move(name);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "episode_id,system_id,score")
    throw SchemaError(csv.string() + ": header must be 'episode_id,system_id,score'");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) throw SchemaError(csv.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    try {
      s.scores_[{f[0], f[1]}] = std::stod(f[2]);
    } catch (const std::exception&) {
      throw SchemaError(csv.string() + ":" + std::to_string(lineno) + ": score is not a number");
    }
  }
  return s;
}

double ImportedScorer::score(const ScoringItem& item) const {
  auto it = scores_.find({item.episode_id, item.system_id});
  if (it == scores_.end())
    throw InvalidArgument("no imported score for episode " + item.episode_id + ", system " + item.system_id);
  return it->second;
}

}  // namespace vlgen::eval
