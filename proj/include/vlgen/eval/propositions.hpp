#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vlgen::eval {

enum class PropositionKind { kAction, kObject, kRegion, kRelation };

std::string_view to_string(PropositionKind kind);

// A semantic tuple. RELATION carries (action, object-or-region); the other
// kinds carry one canonical term.
struct Proposition {
  PropositionKind kind;
  std::vector<std::string> terms;

  static Proposition action(std::string t) { return {PropositionKind::kAction, {std::move(t)}}; }
  static Proposition object(std::string t) { return {PropositionKind::kObject, {std::move(t)}}; }
  static Proposition region(std::string t) { return {PropositionKind::kRegion, {std::move(t)}}; }
  static Proposition relation(std::string a, std::string b) {
    return {PropositionKind::kRelation, {std::move(a), std::move(b)}};
  }

  std::string str() const;
  friend auto operator<=>(const Proposition&, const Proposition&) = default;
};

using PropositionSet = std::set<Proposition>;

// Gazetteers mapping surface phrases (token sequences) to canonical terms.
class Lexicon {
 public:
  // Fixed action synonyms, every palette category (raw and with spaces),
  // and the given region names.
  static Lexicon standard(std::span<const std::string> region_names);

  void add(PropositionKind kind, std::string_view surface, std::string canonical);

  struct Match {
    PropositionKind kind;
    std::string canonical;
    std::size_t length;  // tokens consumed
  };
  // Longest entry starting at tokens[pos], if any.
  std::optional<Match> longest_match(std::span<const std::string> tokens, std::size_t pos) const;

 private:
  // Keyed by space-joined token sequence.
  std::map<std::string, std::pair<PropositionKind, std::string>> entries_;
  std::size_t max_len_ = 0;
};

// Lowercased word and punctuation tokens.
std::vector<std::string> tokenize_for_eval(std::string_view text);

// Longest-match scan producing unary propositions, plus RELATION(action, x)
// for every action and object/region in the same clause. Clauses are
// delimited by punctuation, "and", and "then".
PropositionSet extract_propositions(std::string_view text, const Lexicon& lexicon);

// F1 between candidate propositions and the union over references.
// Both empty -> 1; exactly one empty -> 0.
double proposition_f1(std::string_view candidate, std::span<const std::string> references, const Lexicon& lexicon);
double set_f1(const PropositionSet& candidate, const PropositionSet& reference);

}  // namespace vlgen::eval
