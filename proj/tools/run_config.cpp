#include "run_config.hpp"

#include <fstream>
#include <set>

#include "vlgen/error.hpp"

namespace vlgen::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "seed", "run_dir", "variant",
      "dataset.source", "dataset.scenes", "dataset.paths", "dataset.num_scenes", "dataset.min_rooms",
      "dataset.max_rooms", "dataset.paths_per_scene", "dataset.unseen_fraction", "dataset.val_seen_fraction",
      "dataset.distractors", "dataset.panoramas",
      "map.resolution", "map.mask_radius", "map.pad_size", "map.output_size",
      "prompt.template", "prompt.object_prefix", "prompt.region_pattern", "prompt.near_threshold",
      "prompt.max_objects",
      "eval.metric", "eval.resamples",
      "serve.host", "serve.port", "serve.evaluators", "serve.items_per_evaluator", "serve.ui_dir"};
  return keys;
}

}  // namespace

RunConfig RunConfig::resolve(KeyValueConfig kv) {
  for (const auto& [key, value] : kv.values()) {
    const bool captioner_key = key.starts_with("model.") || key.starts_with("train.");
    if (!captioner_key && !known_keys().contains(key)) throw InvalidArgument("unknown config key '" + key + "'");
  }
  if (!kv.has("seed")) throw InvalidArgument("seed is mandatory (set 'seed = N' or pass --seed)");
  RunConfig run;
  const long long seed = kv.get_int("seed", 0);
  if (seed < 0) throw InvalidArgument("seed must be non-negative");
  run.seed = std::uint64_t(seed);
  run.run_dir = kv.get_string("run_dir", "run");
  run.kv = std::move(kv);
  // Fail early on bad model/train keys and variants.
  run.captioner_config();
  return run;
}

std::string RunConfig::variant() const { return captioner::variant_name(captioner_config().flags); }

EpisodeOptions RunConfig::episode_options() const {
  EpisodeOptions o;
  o.map.resolution = kv.get_double("map.resolution", o.map.resolution);
  o.map.mask_radius = kv.get_double("map.mask_radius", o.map.mask_radius);
  o.map.pad_size = int(kv.get_int("map.pad_size", o.map.pad_size));
  o.map.output_size = int(kv.get_int("map.output_size", o.map.output_size));
  o.prompt.near_threshold = kv.get_double("prompt.near_threshold", o.prompt.near_threshold);
  const long long max_objects = kv.get_int("prompt.max_objects", (long long)o.prompt.max_objects);
  if (max_objects < 0) throw InvalidArgument("prompt.max_objects must be >= 0");
  o.prompt.max_objects = std::size_t(max_objects);
  o.prompt_template.text = kv.get_string("prompt.template", o.prompt_template.text);
  o.prompt_template.object_prefix = kv.get_string("prompt.object_prefix", o.prompt_template.object_prefix);
  o.prompt_template.region_pattern = kv.get_string("prompt.region_pattern", o.prompt_template.region_pattern);
  if (o.prompt_template.region_pattern.find("{name}") == std::string::npos)
    throw InvalidArgument("prompt.region_pattern must contain {name}");
  o.panoramas = kv.get_bool("dataset.panoramas", o.panoramas);
  return o;
}

CorpusSpec RunConfig::corpus_spec() const {
  CorpusSpec s;
  s.num_scenes = int(kv.get_int("dataset.num_scenes", s.num_scenes));
  s.synth.min_rooms = int(kv.get_int("dataset.min_rooms", s.synth.min_rooms));
  s.synth.max_rooms = int(kv.get_int("dataset.max_rooms", s.synth.max_rooms));
  s.synth.paths_per_scene = int(kv.get_int("dataset.paths_per_scene", s.synth.paths_per_scene));
  s.synth.distractors = kv.get_bool("dataset.distractors", s.synth.distractors);
  s.unseen_fraction = kv.get_double("dataset.unseen_fraction", s.unseen_fraction);
  s.val_seen_fraction = kv.get_double("dataset.val_seen_fraction", s.val_seen_fraction);
  if (s.num_scenes < 1) throw InvalidArgument("dataset.num_scenes must be >= 1");
  return s;
}

captioner::CaptionerConfig RunConfig::captioner_config() const {
  auto c = captioner::CaptionerConfig::from_kv(kv);
  if (!kv.has("train.seed")) c.seed = seed;
  return c;
}

void apply_overrides(KeyValueConfig& kv, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidArgument("--set expects key=value, got '" + a + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv.set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
  }
}

void record_step(const RunConfig& run, const std::string& step, const std::vector<fs::path>& outputs,
                 nlohmann::json extra) {
  fs::create_directories(run.run_dir);
  const fs::path file = run.run_dir / "manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (fs::exists(file)) {
    std::ifstream in(file);
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(file.string() + ": " + e.what());
    }
  }
  manifest["seed"] = run.seed;
  nlohmann::json entry;
  entry["config"] = run.kv.values();
  auto& out = entry["outputs"] = nlohmann::json::array();
  for (const auto& p : outputs) out.push_back(fs::relative(p, run.run_dir).generic_string());
  for (auto& [k, v] : extra.items()) entry[k] = v;
  manifest["steps"][step] = entry;
  const fs::path tmp = file.string() + ".tmp";
  std::ofstream(tmp) << manifest.dump(2) << '\n';
  fs::rename(tmp, file);
}

}  // namespace vlgen::cli
