#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vlgen/error.hpp"
#include "vlgen/eval/io.hpp"
#include "vlgen/scene.hpp"
#include "vlgen/service/latin_square.hpp"
#include "vlgen/service/store.hpp"

namespace vlgen::service {

class NotFound : public Error {
 public:
  using Error::Error;
};

class Conflict : public Error {
 public:
  using Error::Error;
};

struct FieldError {
  std::string field;
  std::string message;
};

// Request body failed validation; one entry per offending field.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> errors);
  ValidationError(std::string field, std::string message)
      : ValidationError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

// One system's instruction per episode.
struct SystemOutputs {
  std::string system_id;
  std::map<std::string, std::string> texts;  // episode id -> text
};

// Groups generations by system, in order of first appearance.
std::vector<SystemOutputs> group_generations(const std::vector<eval::Generation>& generations);

struct ServiceConfig {
  std::vector<std::string> evaluators;
  std::size_t items_per_evaluator = 15;
  std::uint64_t seed = 0;
  std::filesystem::path log_path;  // empty: in-memory only
};

// Session logic behind the HTTP endpoints. Every evaluator scores the same
// items; for evaluator e and item i candidates follow square row (e+i) mod n
// and are shown under labels A, B, C, ...
class EvalService {
 public:
  EvalService(std::vector<Episode> episodes, std::vector<SystemOutputs> systems, ServiceConfig config);

  const LatinSquare& square() const { return square_; }
  const std::vector<std::string>& items() const { return items_; }
  const std::vector<std::string>& systems() const { return system_ids_; }
  bool has_evaluator(const std::string& id) const { return evaluator_index_.contains(id); }

  // System ids in display order. Throws NotFound for an unknown evaluator.
  std::vector<std::string> candidate_order(const std::string& evaluator, std::size_t item) const;

  // Next item with unscored candidates, or "item": null when complete.
  nlohmann::json session(const std::string& evaluator) const;

  // Body: {evaluator_id, episode_id, label, score, error_tags?}. Throws
  // NotFound, ValidationError or Conflict; returns the stored response.
  Response submit(const nlohmann::json& body);

  // Human-scores CSV, rows in submission order.
  std::string export_csv() const;

  std::shared_ptr<const ResponseStore::Snapshot> snapshot() const { return store_.snapshot(); }

 private:
  std::size_t evaluator_pos(const std::string& id) const;

  std::map<std::string, Episode> episodes_;
  std::vector<SystemOutputs> outputs_;
  std::vector<std::string> system_ids_;
  ServiceConfig config_;
  std::map<std::string, std::size_t> evaluator_index_;
  std::vector<std::string> items_;
  LatinSquare square_;
  ResponseStore store_;
};

std::string utc_timestamp();

}  // namespace vlgen::service
