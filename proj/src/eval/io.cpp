#include "vlgen/eval/io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vlgen/error.hpp"

namespace vlgen::eval {

using nlohmann::json;

std::string generation_line(const Generation& g) {
  return json{{"episode_id", g.episode_id}, {"system_id", g.system_id}, {"text", g.text}}.dump() + "\n";
}

std::vector<Generation> load_generations(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw Error("cannot open generations file " + jsonl.string());
  std::vector<Generation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto doc = json::parse(line);
      out.push_back({doc.at("episode_id").get<std::string>(), doc.at("system_id").get<std::string>(),
                     doc.at("text").get<std::string>()});
    } catch (const json::exception& ex) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

void save_generations(const std::vector<Generation>& generations, const std::filesystem::path& jsonl) {
  std::ofstream out(jsonl, std::ios::binary);
  if (!out) throw Error("cannot write " + jsonl.string());
  for (const auto& g : generations) out << generation_line(g);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::vector<HumanScore> parse_human_scores(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source + ": empty human-scores file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHumanScoresHeader)
    throw SchemaError(source + ": header must be '" + std::string(kHumanScoresHeader) + "'");
  std::vector<HumanScore> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto f = split_csv_line(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (f.size() != 4) throw SchemaError(where + ": expected 4 fields");
    int score = 0;
    try {
      std::size_t used = 0;
      score = std::stoi(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw SchemaError(where + ": score: expected an integer, got '" + f[3] + "'");
    }
    if (score < 0 || score > 10) throw SchemaError(where + ": score: must be in [0, 10]");
    out.push_back({f[0], f[1], f[2], score});
  }
  return out;
}

std::vector<HumanScore> load_human_scores(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw Error("cannot open human-scores file " + csv.string());
  return parse_human_scores(in, csv.string());
}

std::string format_human_scores(const std::vector<HumanScore>& scores) {
  std::string out = std::string(kHumanScoresHeader) + "\n";
  for (const auto& s : scores)
    out += csv_field(s.episode_id) + "," + csv_field(s.system_id) + "," + csv_field(s.evaluator_id) + "," +
           std::to_string(s.score) + "\n";
  return out;
}

}  // namespace vlgen::eval
