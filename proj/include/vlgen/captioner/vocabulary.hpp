#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vlgen::captioner {

// Lowercased words; punctuation characters become their own tokens.
std::vector<std::string> tokenize(std::string_view text);
// Joins tokens with spaces, attaching , . ; : ! ? to the preceding word.
std::string detokenize(std::span<const std::string> tokens);

class Vocabulary {
 public:
  static constexpr int kPad = 0, kBos = 1, kEos = 2, kUnk = 3;

  Vocabulary();
  // Specials first, then every distinct token of the texts in first-seen order.
  static Vocabulary build(std::span<const std::string> texts);

  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  bool contains(const std::string& token) const { return ids_.contains(token); }
  int size() const { return int(tokens_.size()); }

  std::vector<int> encode(std::string_view text) const;
  // Stops at EOS; skips PAD and BOS.
  std::string decode(std::span<const int> ids) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

}  // namespace vlgen::captioner
