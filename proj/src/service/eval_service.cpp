#include "vlgen/service/eval_service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <random>
#include <set>

namespace vlgen::service {

namespace {

std::string join_messages(const std::vector<FieldError>& errors) {
  std::string msg = "invalid request";
  for (const auto& e : errors) msg += "; " + e.field + ": " + e.message;
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<FieldError> errors)
    : Error(join_messages(errors)), errors_(std::move(errors)) {}

std::vector<SystemOutputs> group_generations(const std::vector<eval::Generation>& generations) {
  std::vector<SystemOutputs> out;
  std::map<std::string, std::size_t> index;
  for (const auto& g : generations) {
    auto [it, fresh] = index.emplace(g.system_id, out.size());
    if (fresh) out.push_back({g.system_id, {}});
    if (!out[it->second].texts.emplace(g.episode_id, g.text).second)
      throw InvalidArgument("system " + g.system_id + " has two generations for episode " + g.episode_id);
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, int(ms));
  return out;
}

EvalService::EvalService(std::vector<Episode> episodes, std::vector<SystemOutputs> systems, ServiceConfig config)
    : outputs_(std::move(systems)), config_(std::move(config)), store_(config_.log_path) {
  const std::size_t n = outputs_.size();
  if (n == 0 || n > 26) throw InvalidArgument("need between 1 and 26 systems, got " + std::to_string(n));
  if (config_.evaluators.empty()) throw InvalidArgument("no evaluators configured");
  if (config_.items_per_evaluator == 0) throw InvalidArgument("items_per_evaluator must be positive");
  for (const auto& s : outputs_) {
    if (std::find(system_ids_.begin(), system_ids_.end(), s.system_id) != system_ids_.end())
      throw InvalidArgument("system " + s.system_id + " configured twice");
    system_ids_.push_back(s.system_id);
  }
  for (std::size_t i = 0; i < config_.evaluators.size(); ++i)
    if (!evaluator_index_.emplace(config_.evaluators[i], i).second)
      throw InvalidArgument("evaluator " + config_.evaluators[i] + " configured twice");
  for (auto& e : episodes) {
    const std::string id = e.id;
    episodes_.emplace(id, std::move(e));
  }

  // Candidate pool: episodes every system has an output for.
  std::vector<std::string> pool;
  for (const auto& [id, ep] : episodes_)
    if (std::all_of(outputs_.begin(), outputs_.end(), [&](const SystemOutputs& s) { return s.texts.contains(id); }))
      pool.push_back(id);
  if (pool.size() < config_.items_per_evaluator)
    throw InvalidArgument("only " + std::to_string(pool.size()) + " episodes have outputs from every system; need " +
                          std::to_string(config_.items_per_evaluator));
  std::mt19937_64 rng(config_.seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  items_.assign(pool.begin(), pool.begin() + long(config_.items_per_evaluator));
  square_ = make_latin_square(int(n), config_.seed ^ 0x5eed5eedULL);

  const std::set<std::string> item_set(items_.begin(), items_.end());
  for (const auto& r : store_.snapshot()->responses) {
    if (!has_evaluator(r.evaluator_id) || !item_set.contains(r.episode_id) ||
        std::find(system_ids_.begin(), system_ids_.end(), r.system_id) == system_ids_.end())
      throw Error("response log " + config_.log_path.string() + " does not match this configuration (entry " +
                  r.evaluator_id + "/" + r.episode_id + "/" + r.system_id + ")");
  }
}

std::size_t EvalService::evaluator_pos(const std::string& id) const {
  auto it = evaluator_index_.find(id);
  if (it == evaluator_index_.end()) throw NotFound("unknown evaluator '" + id + "'");
  return it->second;
}

std::vector<std::string> EvalService::candidate_order(const std::string& evaluator, std::size_t item) const {
  const std::size_t e = evaluator_pos(evaluator);
  if (item >= items_.size()) throw NotFound("item index " + std::to_string(item) + " out of range");
  const auto& row = square_.row(int((e + item) % system_ids_.size()));
  std::vector<std::string> order;
  for (int s : row) order.push_back(system_ids_[s]);
  return order;
}

nlohmann::json EvalService::session(const std::string& evaluator) const {
  evaluator_pos(evaluator);
  const auto snap = store_.snapshot();
  std::size_t completed = 0;
  std::optional<std::size_t> next;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    std::size_t scored = 0;
    for (const auto& s : system_ids_) scored += snap->contains({evaluator, items_[i], s});
    if (scored == system_ids_.size())
      ++completed;
    else if (!next)
      next = i;
  }
  nlohmann::json j = {{"evaluator_id", evaluator},
                      {"total_items", items_.size()},
                      {"completed_items", completed},
                      {"complete", !next.has_value()},
                      {"error_tags", kErrorTags},
                      {"item", nullptr}};
  if (!next) return j;

  const std::string& id = items_[*next];
  const Episode& ep = episodes_.at(id);
  std::vector<std::string> regions;
  for (const auto& pr : ep.point_regions)
    for (const auto& r : pr)
      if (std::find(regions.begin(), regions.end(), r) == regions.end()) regions.push_back(r);
  nlohmann::json panoramas = nlohmann::json::array();
  if (ep.panorama_paths)
    for (const auto& p : *ep.panorama_paths) panoramas.push_back("/files/" + p);
  nlohmann::json candidates = nlohmann::json::array();
  const auto order = candidate_order(evaluator, *next);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& sys = *std::find_if(outputs_.begin(), outputs_.end(),
                                    [&](const SystemOutputs& s) { return s.system_id == order[k]; });
    candidates.push_back({{"label", std::string(1, char('A' + k))},
                          {"text", sys.texts.at(id)},
                          {"scored", snap->contains({evaluator, id, order[k]})}});
  }
  j["item"] = {{"index", *next},
               {"episode_id", id},
               {"map_url", "/files/" + ep.map_image_path},
               {"panorama_urls", panoramas},
               {"regions", regions},
               {"candidates", candidates}};
  return j;
}

Response EvalService::submit(const nlohmann::json& body) {
  std::vector<FieldError> errors;
  if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
  auto string_field = [&](const char* f) -> std::string {
    if (!body.contains(f)) {
      errors.push_back({f, "missing"});
      return {};
    }
    if (!body[f].is_string() || body[f].get<std::string>().empty()) {
      errors.push_back({f, "expected a non-empty string"});
      return {};
    }
    return body[f].get<std::string>();
  };
  Response r;
  r.evaluator_id = string_field("evaluator_id");
  r.episode_id = string_field("episode_id");
  const std::string label = string_field("label");
  if (!body.contains("score"))
    errors.push_back({"score", "missing"});
  else if (!body["score"].is_number_integer())
    errors.push_back({"score", "expected an integer from 0 to 10"});
  else if (const auto v = body["score"].get<long long>(); v < 0 || v > 10)
    errors.push_back({"score", "must be between 0 and 10, got " + std::to_string(v)});
  else
    r.score = int(v);
  if (body.contains("error_tags")) {
    const auto& tags = body["error_tags"];
    if (!tags.is_array()) {
      errors.push_back({"error_tags", "expected an array of strings"});
    } else {
      for (std::size_t i = 0; i < tags.size(); ++i) {
        const std::string field = "error_tags[" + std::to_string(i) + "]";
        if (!tags[i].is_string()) {
          errors.push_back({field, "expected a string"});
          continue;
        }
        const auto t = tags[i].get<std::string>();
        if (std::find(kErrorTags.begin(), kErrorTags.end(), t) == kErrorTags.end())
          errors.push_back({field, "unknown tag '" + t + "'"});
        else if (std::find(r.error_tags.begin(), r.error_tags.end(), t) != r.error_tags.end())
          errors.push_back({field, "duplicate tag '" + t + "'"});
        else
          r.error_tags.push_back(t);
      }
    }
  }
  for (const auto& [key, value] : body.items())
    if (key != "evaluator_id" && key != "episode_id" && key != "label" && key != "score" && key != "error_tags")
      errors.push_back({key, "unknown field"});
  if (!errors.empty()) throw ValidationError(std::move(errors));

  evaluator_pos(r.evaluator_id);
  const auto item = std::find(items_.begin(), items_.end(), r.episode_id);
  if (item == items_.end()) throw ValidationError("episode_id", "'" + r.episode_id + "' is not an assigned item");
  const auto order = candidate_order(r.evaluator_id, std::size_t(item - items_.begin()));
  if (label.size() != 1 || label[0] < 'A' || std::size_t(label[0] - 'A') >= order.size())
    throw ValidationError("label", "expected one of A.." + std::string(1, char('A' + order.size() - 1)));
  r.system_id = order[label[0] - 'A'];
  r.timestamp = utc_timestamp();
  if (!store_.append(r))
    throw Conflict("candidate " + label + " of " + r.episode_id + " already scored by " + r.evaluator_id);
  return r;
}

std::string EvalService::export_csv() const {
  std::vector<eval::HumanScore> rows;
  for (const auto& r : store_.snapshot()->responses)
    rows.push_back({r.episode_id, r.system_id, r.evaluator_id, r.score});
  return eval::format_human_scores(rows);
}

}  // namespace vlgen::service
