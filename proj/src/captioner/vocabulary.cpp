#include "vlgen/captioner/vocabulary.hpp"

#include <cctype>

#include "vlgen/error.hpp"

namespace vlgen::captioner {

namespace {

const char* const kSpecials[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\'' || c == '-' || c >= 0x80; }

bool attaches_left(const std::string& t) {
  return t == "," || t == "." || t == ";" || t == ":" || t == "!" || t == "?";
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_char(c)) {
      cur += char(std::tolower(c));
      continue;
    }
    if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    if (!std::isspace(c)) out.emplace_back(1, char(c));
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty() && !attaches_left(t)) out += ' ';
    out += t;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* s : kSpecials) add(s);
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
  Vocabulary v;
  for (const auto& text : texts)
    for (const auto& t : tokenize(text)) v.add(t);
  return v;
}

int Vocabulary::add(const std::string& token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const int id = int(tokens_.size());
  tokens_.push_back(token);
  ids_[token] = id;
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw InvalidArgument("token id " + std::to_string(id) + " out of range");
  return tokens_[std::size_t(id)];
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> words;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kBos) continue;
    words.push_back(token(i));
  }
  return detokenize(words);
}

nlohmann::json Vocabulary::to_json() const { return tokens_; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() < 4) throw SchemaError("vocabulary: expected an array with the 4 special tokens");
  Vocabulary v;
  for (std::size_t i = 0; i < 4; ++i)
    if (j[i] != kSpecials[i]) throw SchemaError("vocabulary[" + std::to_string(i) + "]: expected " + kSpecials[i]);
  for (std::size_t i = 4; i < j.size(); ++i) {
    if (!j[i].is_string()) throw SchemaError("vocabulary[" + std::to_string(i) + "]: expected a string");
    if (v.contains(j[i])) throw SchemaError("vocabulary[" + std::to_string(i) + "]: duplicate token");
    v.add(j[i]);
  }
  return v;
}

}  // namespace vlgen::captioner
