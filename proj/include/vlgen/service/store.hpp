#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "vlgen/error.hpp"

namespace vlgen::service {

inline constexpr std::array<std::string_view, 4> kErrorTags = {"incorrect", "hallucination", "redundancy",
                                                               "linguistic"};

// One scored candidate.
struct Response {
  std::string evaluator_id;
  std::string episode_id;
  std::string system_id;
  int score = 0;
  std::vector<std::string> error_tags;
  std::string timestamp;  // UTC, ISO 8601

  using Key = std::tuple<std::string, std::string, std::string>;
  Key key() const { return {evaluator_id, episode_id, system_id}; }
  friend bool operator==(const Response&, const Response&) = default;
};

nlohmann::json to_json(const Response& r);
// Throws SchemaError naming the field.
Response response_from_json(const nlohmann::json& j);

// Append-only JSONL response log with derived state. Appends are
// serialized; readers take an immutable snapshot without locking.
class ResponseStore {
 public:
  struct Snapshot {
    std::vector<Response> responses;  // log order
    std::set<Response::Key> keys;

    bool contains(const Response::Key& k) const { return keys.contains(k); }
    friend bool operator==(const Snapshot&, const Snapshot&) = default;
  };

  // Replays an existing log. An empty path keeps responses in memory only.
  // Repeated log entries for one key are skipped; a torn final line is
  // dropped with a warning.
  explicit ResponseStore(std::filesystem::path log = {});

  // False (and nothing written) when the key was already scored.
  bool append(const Response& r);
  std::shared_ptr<const Snapshot> snapshot() const;

 private:
  std::filesystem::path log_;
  std::ofstream out_;
  std::mutex write_mutex_;
  std::shared_ptr<const Snapshot> current_;
};

}  // namespace vlgen::service
