#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vlgen/prompt.hpp"
#include "vlgen/raster.hpp"
#include "vlgen/scene.hpp"
#include "vlgen/synthetic.hpp"

namespace vlgen {

struct EpisodeOptions {
  MapOptions map;
  PromptOptions prompt;
  PromptTemplate prompt_template;
  bool panoramas = false;
};

// The 384x384 model-input map for a path: rasterize, mask, pad, resize.
SemanticMap render_episode_map(const Scene& scene, const NavPath& path, const MapOptions& options);

// Builds one episode and writes its map PNG (and panoramas when enabled)
// under `out_dir`. File references in the episode are relative to out_dir.
Episode build_episode(const Scene& scene, const NavPath& path, const std::vector<std::string>& references,
                      const std::string& episode_id, Split split, const std::filesystem::path& out_dir,
                      const EpisodeOptions& options = {});

struct CorpusSpec {
  int num_scenes = 100;
  SynthSpec synth;
  double unseen_fraction = 0.1;  // scenes held out as val_unseen
  double val_seen_fraction = 0.1;  // paths of seen scenes assigned to val_seen
};

struct Corpus {
  std::vector<Scene> scenes;
  std::vector<Episode> episodes;
};

// Generates scenes from `seed`, builds every episode in parallel, and writes
//   out_dir/episodes.jsonl, out_dir/scenes/<id>.json, out_dir/maps/*.png
// Output bytes depend only on (seed, spec, options).
Corpus build_synthetic_corpus(std::uint64_t seed, const CorpusSpec& spec, const std::filesystem::path& out_dir,
                              const EpisodeOptions& options = {});

// Path records for scene files: one JSON object per line with keys
// scene_id, points, agent_height, references, split (optional, default train),
// id (optional).
struct PathRecord {
  std::string id;
  std::string scene_id;
  NavPath path;
  std::vector<std::string> references;
  Split split = Split::kTrain;
};
std::vector<PathRecord> load_path_records(const std::filesystem::path& jsonl);

Corpus build_corpus_from_files(const std::vector<Scene>& scenes, const std::vector<PathRecord>& paths,
                               const std::filesystem::path& out_dir, const EpisodeOptions& options = {});

// Per-split statistics in the layout of the corpus statistics table.
struct SplitStats {
  Split split;
  std::size_t size = 0;
  double avg_points = 0;
  double avg_regions = 0;  // distinct regions along the path
  double avg_objects = 0;  // distinct object categories on the map
};
std::vector<SplitStats> corpus_stats(const std::vector<Scene>& scenes, const std::vector<Episode>& episodes);
std::string format_stats(const std::vector<SplitStats>& stats);

}  // namespace vlgen
