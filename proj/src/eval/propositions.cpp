#include "vlgen/eval/propositions.hpp"

#include <algorithm>
#include <cctype>

#include "vlgen/palette.hpp"

namespace vlgen::eval {
namespace {

struct Synonym {
  const char* surface;
  const char* canonical;
};

constexpr Synonym kActionSynonyms[] = {
    {"left", "left"},       {"right", "right"},      {"straight", "straight"}, {"forward", "straight"},
    {"ahead", "straight"},  {"stop", "stop"},        {"wait", "stop"},         {"halt", "stop"},
    {"exit", "exit"},       {"leave", "exit"},       {"enter", "enter"},       {"turn around", "turn around"},
    {"upstairs", "up"},     {"downstairs", "down"},
};

bool is_clause_break(const std::string& tok) {
  return tok == "," || tok == "." || tok == ";" || tok == "!" || tok == "?" || tok == "and" || tok == "then";
}

std::string join_tokens(std::span<const std::string> toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(PropositionKind kind) {
  switch (kind) {
    case PropositionKind::kAction: return "ACTION";
    case PropositionKind::kObject: return "OBJECT";
    case PropositionKind::kRegion: return "REGION";
    case PropositionKind::kRelation: return "RELATION";
  }
  return "?";
}

std::string Proposition::str() const {
  std::string out(to_string(kind));
  out += '(';
  for (std::size_t i = 0; i < terms.size(); ++i) out += (i ? "," : "") + terms[i];
  return out + ')';
}

std::vector<std::string> tokenize_for_eval(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '_' || c == '\'') {
      cur += char(std::tolower(c));
    } else {
      flush();
      if (std::ispunct(c)) out.emplace_back(1, char(c));
    }
  }
  flush();
  return out;
}

void Lexicon::add(PropositionKind kind, std::string_view surface, std::string canonical) {
  const auto toks = tokenize_for_eval(surface);
  if (toks.empty()) return;
  max_len_ = std::max(max_len_, toks.size());
  entries_[join_tokens(toks)] = {kind, std::move(canonical)};
}

Lexicon Lexicon::standard(std::span<const std::string> region_names) {
  Lexicon lex;
  for (const auto& cat : Palette::categories()) {
    if (is_excluded_category(cat)) continue;
    std::string spaced = cat;
    std::replace(spaced.begin(), spaced.end(), '_', ' ');
    lex.add(PropositionKind::kObject, cat, cat);
    lex.add(PropositionKind::kObject, spaced, cat);
  }
  for (const auto& r : region_names) lex.add(PropositionKind::kRegion, r, join_tokens(tokenize_for_eval(r)));
  for (const auto& s : kActionSynonyms) lex.add(PropositionKind::kAction, s.surface, s.canonical);
  return lex;
}

std::optional<Lexicon::Match> Lexicon::longest_match(std::span<const std::string> tokens, std::size_t pos) const {
  const std::size_t limit = std::min(max_len_, tokens.size() - pos);
  for (std::size_t len = limit; len >= 1; --len) {
    auto it = entries_.find(join_tokens(tokens.subspan(pos, len)));
    if (it != entries_.end()) return Match{it->second.first, it->second.second, len};
  }
  return std::nullopt;
}

PropositionSet extract_propositions(std::string_view text, const Lexicon& lexicon) {
  PropositionSet out;
  const auto tokens = tokenize_for_eval(text);
  std::vector<std::string> actions, entities;
  auto close_clause = [&] {
    for (const auto& a : actions)
      for (const auto& e : entities) out.insert(Proposition::relation(a, e));
    actions.clear();
    entities.clear();
  };
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    if (is_clause_break(tokens[pos])) {
      close_clause();
      ++pos;
      continue;
    }
    auto m = lexicon.longest_match(tokens, pos);
    if (!m) {
      ++pos;
      continue;
    }
    switch (m->kind) {
      case PropositionKind::kAction:
        out.insert(Proposition::action(m->canonical));
        actions.push_back(m->canonical);
        break;
      case PropositionKind::kObject:
        out.insert(Proposition::object(m->canonical));
        entities.push_back(m->canonical);
        break;
      case PropositionKind::kRegion:
        out.insert(Proposition::region(m->canonical));
        entities.push_back(m->canonical);
        break;
      case PropositionKind::kRelation: break;
    }
    pos += m->length;
  }
  close_clause();
  return out;
}

double set_f1(const PropositionSet& cand, const PropositionSet& ref) {
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& p : cand) hit += ref.contains(p);
  if (hit == 0) return 0.0;
  const double precision = double(hit) / double(cand.size());
  const double recall = double(hit) / double(ref.size());
  return 2 * precision * recall / (precision + recall);
}

double proposition_f1(std::string_view candidate, std::span<const std::string> references, const Lexicon& lexicon) {
  PropositionSet ref;
  for (const auto& r : references) {
    auto s = extract_propositions(r, lexicon);
    ref.insert(s.begin(), s.end());
  }
  return set_f1(extract_propositions(candidate, lexicon), ref);
}

}  // namespace vlgen::eval
