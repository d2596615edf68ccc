#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vlgen::eval {

// One generated instruction: a line of the generations JSONL.
struct Generation {
  std::string episode_id;
  std::string system_id;
  std::string text;
  friend bool operator==(const Generation&, const Generation&) = default;
};

std::vector<Generation> load_generations(const std::filesystem::path& jsonl);
void save_generations(const std::vector<Generation>& generations, const std::filesystem::path& jsonl);
std::string generation_line(const Generation& g);

// One human rating: a row of the human-scores CSV.
struct HumanScore {
  std::string episode_id;
  std::string system_id;
  std::string evaluator_id;
  int score = 0;
  friend bool operator==(const HumanScore&, const HumanScore&) = default;
};

inline constexpr const char* kHumanScoresHeader = "episode_id,system_id,evaluator_id,score";

std::vector<HumanScore> parse_human_scores(std::istream& in, const std::string& source = "<stream>");
std::vector<HumanScore> load_human_scores(const std::filesystem::path& csv);
// Header line plus one row per score, '\n' line endings.
std::string format_human_scores(const std::vector<HumanScore>& scores);

// Minimal CSV field handling (quotes when the field has , " or newline).
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_field(const std::string& field);

}  // namespace vlgen::eval
