#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vlgen/captioner/config.hpp"
#include "vlgen/dataset.hpp"
#include "vlgen/kv_config.hpp"

namespace vlgen::cli {

// Run configuration: one key-value file plus command-line overrides.
// Relative paths are taken from the current directory.
struct RunConfig {
  KeyValueConfig kv;
  std::uint64_t seed = 0;
  std::filesystem::path run_dir;

  // Throws InvalidArgument on unknown keys, a missing seed, or an
  // unsupported variant.
  static RunConfig resolve(KeyValueConfig kv);

  std::filesystem::path dataset_dir() const { return run_dir / "dataset"; }
  std::filesystem::path episodes_file() const { return dataset_dir() / "episodes.jsonl"; }
  std::filesystem::path train_dir(const std::string& variant) const { return run_dir / "train" / variant; }
  std::filesystem::path generations_dir() const { return run_dir / "generations"; }
  std::filesystem::path eval_dir() const { return run_dir / "eval"; }

  std::string variant() const;
  EpisodeOptions episode_options() const;
  CorpusSpec corpus_spec() const;
  captioner::CaptionerConfig captioner_config() const;
};

// Applies "key=value" overrides.
void apply_overrides(KeyValueConfig& kv, const std::vector<std::string>& assignments);

// run_dir/manifest.json: the effective configuration and, per step, the
// artifacts it wrote (paths relative to the run directory).
void record_step(const RunConfig& run, const std::string& step, const std::vector<std::filesystem::path>& outputs,
                 nlohmann::json extra = nlohmann::json::object());

}  // namespace vlgen::cli
