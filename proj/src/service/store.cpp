#include "vlgen/service/store.hpp"

#include <algorithm>
#include <atomic>
#include <iterator>

#include "vlgen/log.hpp"

namespace vlgen::service {

nlohmann::json to_json(const Response& r) {
  return {{"evaluator_id", r.evaluator_id}, {"episode_id", r.episode_id}, {"system_id", r.system_id},
          {"score", r.score}, {"error_tags", r.error_tags}, {"timestamp", r.timestamp}};
}

namespace {

std::string required_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string() || j[field].get<std::string>().empty())
    throw SchemaError(std::string(field) + ": expected a non-empty string");
  return j[field].get<std::string>();
}

}  // namespace

Response response_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("response: expected an object");
  Response r;
  r.evaluator_id = required_string(j, "evaluator_id");
  r.episode_id = required_string(j, "episode_id");
  r.system_id = required_string(j, "system_id");
  r.timestamp = required_string(j, "timestamp");
  if (!j.contains("score") || !j["score"].is_number_integer()) throw SchemaError("score: expected an integer");
  r.score = j["score"].get<int>();
  if (r.score < 0 || r.score > 10) throw SchemaError("score: must be in [0, 10]");
  if (j.contains("error_tags")) {
    if (!j["error_tags"].is_array()) throw SchemaError("error_tags: expected an array");
    for (std::size_t i = 0; i < j["error_tags"].size(); ++i) {
      const auto& t = j["error_tags"][i];
      const std::string field = "error_tags[" + std::to_string(i) + "]";
      if (!t.is_string()) throw SchemaError(field + ": expected a string");
      if (std::find(kErrorTags.begin(), kErrorTags.end(), t.get<std::string>()) == kErrorTags.end())
        throw SchemaError(field + ": unknown tag '" + t.get<std::string>() + "'");
      r.error_tags.push_back(t.get<std::string>());
    }
  }
  return r;
}

ResponseStore::ResponseStore(std::filesystem::path log) : log_(std::move(log)) {
  auto snap = std::make_shared<Snapshot>();
  if (!log_.empty()) {
    if (log_.has_parent_path()) std::filesystem::create_directories(log_.parent_path());
    std::string text;
    if (std::ifstream in{log_, std::ios::binary}) text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    std::size_t pos = 0, lineno = 0;
    bool terminate_last = false;
    while (pos < text.size()) {
      ++lineno;
      const std::size_t nl = text.find('\n', pos);
      const bool complete = nl != std::string::npos;
      const std::string line = text.substr(pos, complete ? nl - pos : std::string::npos);
      Response r;
      if (line.empty()) {
        pos = nl + 1;
        continue;
      }
      try {
        r = response_from_json(nlohmann::json::parse(line));
      } catch (const std::exception& e) {
        if (complete) throw Error(log_.string() + ":" + std::to_string(lineno) + ": " + e.what());
        warn(log_.string() + ":" + std::to_string(lineno) + ": dropping torn final line");
        std::filesystem::resize_file(log_, pos);
        break;
      }
      terminate_last = !complete;
      if (!snap->keys.insert(r.key()).second)
        warn(log_.string() + ":" + std::to_string(lineno) + ": repeated entry for " + r.evaluator_id + "/" +
             r.episode_id + "/" + r.system_id + " ignored");
      else
        snap->responses.push_back(std::move(r));
      if (!complete) break;
      pos = nl + 1;
    }
    out_.open(log_, std::ios::app);
    if (!out_) throw Error("cannot open response log " + log_.string());
    if (terminate_last) out_ << '\n' << std::flush;
  }
  current_ = std::move(snap);
}

bool ResponseStore::append(const Response& r) {
  std::lock_guard lock(write_mutex_);
  auto cur = std::atomic_load(&current_);
  if (cur->contains(r.key())) return false;
  if (out_.is_open()) {
    out_ << to_json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw Error("write to response log " + log_.string() + " failed");
  }
  auto next = std::make_shared<Snapshot>(*cur);
  next->responses.push_back(r);
  next->keys.insert(r.key());
  std::atomic_store(&current_, std::shared_ptr<const Snapshot>(std::move(next)));
  return true;
}

std::shared_ptr<const ResponseStore::Snapshot> ResponseStore::snapshot() const {
  return std::atomic_load(&current_);
}

}  // namespace vlgen::service
