#include "vlgen/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vlgen/error.hpp"
#include "vlgen/geometry.hpp"
#include "vlgen/image.hpp"

namespace vlgen {

namespace fs = std::filesystem;

SemanticMap render_episode_map(const Scene& scene, const NavPath& path, const MapOptions& options) {
  const auto raster = rasterize(scene, path, options.resolution);
  const auto pixels = trace_path_pixels(raster, path);
  const auto masked = mask_map(raster, pixels, options.mask_radius);
  return pad_and_resize(masked, options.pad_size, options.output_size);
}

Episode build_episode(const Scene& scene, const NavPath& path, const std::vector<std::string>& references,
                      const std::string& episode_id, Split split, const fs::path& out_dir,
                      const EpisodeOptions& options) {
  validate(path);
  if (references.empty()) throw InvalidArgument("build_episode: at least one reference is required");
  Episode e;
  e.id = episode_id;
  e.scene_id = scene.id;
  e.path = path;
  e.split = split;
  e.references = references;
  e.actions = classify_actions(path);
  for (auto p : path.points) e.point_regions.push_back(assign_regions(p, scene.regions));
  e.prompt = build_prompt(e, scene, options.prompt, options.prompt_template);

  const auto map = render_episode_map(scene, path, options.map);
  fs::create_directories(out_dir / "maps");
  e.map_image_path = "maps/" + episode_id + ".png";
  write_png(map.pixels, out_dir / e.map_image_path);

  if (options.panoramas) {
    fs::create_directories(out_dir / "panoramas");
    std::vector<std::string> panos;
    for (std::size_t k = 0; k < path.points.size(); ++k) {
      std::string rel = "panoramas/" + episode_id + "_" + std::to_string(k) + ".png";
      write_png(render_panorama(scene, path.points[k], path.agent_height), out_dir / rel);
      panos.push_back(std::move(rel));
    }
    e.panorama_paths = std::move(panos);
  }
  validate(e);
  return e;
}

namespace {

struct Job {
  const Scene* scene;
  NavPath path;
  std::vector<std::string> references;
  std::string id;
  Split split;
};

std::vector<Episode> run_jobs(const std::vector<Job>& jobs, const fs::path& out_dir, const EpisodeOptions& options) {
  fs::create_directories(out_dir / "maps");
  if (options.panoramas) fs::create_directories(out_dir / "panoramas");
  std::vector<Episode> episodes(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const auto& j = jobs[i];
      episodes[i] = build_episode(*j.scene, j.path, j.references, j.id, j.split, out_dir, options);
    } catch (const std::exception& ex) {
      errors[i] = jobs[i].id + ": " + ex.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw Error(err);
  return episodes;
}

void write_outputs(const Corpus& corpus, const fs::path& out_dir) {
  fs::create_directories(out_dir / "scenes");
  for (const auto& s : corpus.scenes) save_scene(s, out_dir / "scenes" / (s.id + ".json"));
  save_episodes(corpus.episodes, out_dir / "episodes.jsonl");
}

}  // namespace

Corpus build_synthetic_corpus(std::uint64_t seed, const CorpusSpec& spec, const fs::path& out_dir,
                              const EpisodeOptions& options) {
  if (spec.num_scenes < 1) throw InvalidArgument("corpus needs at least one scene");
  Corpus corpus;
  std::vector<std::vector<std::string>> refs;
  std::vector<std::vector<NavPath>> paths;
  for (int s = 0; s < spec.num_scenes; ++s) {
    // Scene seeds are spread so neighbouring corpora do not share scenes.
    auto synth = generate_synthetic_scene(seed * 1000003ULL + std::uint64_t(s), spec.synth);
    synth.scene.id = "scene_" + std::to_string(seed) + "_" + std::to_string(s);
    corpus.scenes.push_back(std::move(synth.scene));
    paths.push_back(std::move(synth.paths));
    refs.push_back(std::move(synth.references));
  }
  const int unseen = std::min(spec.num_scenes - 1, int(spec.num_scenes * spec.unseen_fraction + 0.5));
  const int val_seen_every = spec.val_seen_fraction > 0 ? std::max(1, int(1.0 / spec.val_seen_fraction + 0.5)) : 0;

  std::vector<Job> jobs;
  int seen_counter = 0;
  for (int s = 0; s < spec.num_scenes; ++s) {
    const bool is_unseen = s >= spec.num_scenes - unseen;
    for (std::size_t p = 0; p < paths[s].size(); ++p) {
      Split split = Split::kTrain;
      if (is_unseen)
        split = Split::kValUnseen;
      else if (val_seen_every && ++seen_counter % val_seen_every == 0)
        split = Split::kValSeen;
      char id[64];
      std::snprintf(id, sizeof id, "ep_%04d_%02zu", s, p);
      jobs.push_back({&corpus.scenes[s], paths[s][p], {refs[s][p]}, id, split});
    }
  }
  corpus.episodes = run_jobs(jobs, out_dir, options);
  write_outputs(corpus, out_dir);
  return corpus;
}

std::vector<PathRecord> load_path_records(const fs::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw Error("cannot open path file " + jsonl.string());
  std::vector<PathRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = jsonl.string() + ":" + std::to_string(lineno);
    try {
      const auto doc = nlohmann::json::parse(line);
      PathRecord rec;
      rec.scene_id = doc.at("scene_id").get<std::string>();
      rec.id = doc.value("id", rec.scene_id + "_" + std::to_string(out.size()));
      for (const auto& p : doc.at("points")) rec.path.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      rec.path.agent_height = doc.at("agent_height").get<double>();
      rec.references = doc.at("references").get<std::vector<std::string>>();
      rec.split = parse_split(doc.value("split", std::string("train")));
      validate(rec.path, "points");
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(where + ": " + ex.what());
    } catch (const SchemaError& ex) {
      throw SchemaError(where + ": " + ex.what());
    }
  }
  return out;
}

Corpus build_corpus_from_files(const std::vector<Scene>& scenes, const std::vector<PathRecord>& paths,
                               const fs::path& out_dir, const EpisodeOptions& options) {
  Corpus corpus;
  corpus.scenes = scenes;
  std::vector<Job> jobs;
  for (const auto& rec : paths) {
    const Scene* scene = nullptr;
    for (const auto& s : corpus.scenes)
      if (s.id == rec.scene_id) scene = &s;
    if (!scene) throw InvalidArgument("path " + rec.id + " references unknown scene '" + rec.scene_id + "'");
    jobs.push_back({scene, rec.path, rec.references, rec.id, rec.split});
  }
  corpus.episodes = run_jobs(jobs, out_dir, options);
  write_outputs(corpus, out_dir);
  return corpus;
}

std::vector<SplitStats> corpus_stats(const std::vector<Scene>& scenes, const std::vector<Episode>& episodes) {
  std::map<std::string, const Scene*> by_id;
  for (const auto& s : scenes) by_id[s.id] = &s;
  std::vector<SplitStats> out;
  for (Split split : {Split::kTrain, Split::kValSeen, Split::kValUnseen}) {
    SplitStats st{split};
    for (const auto& e : episodes) {
      if (e.split != split) continue;
      auto it = by_id.find(e.scene_id);
      if (it == by_id.end()) throw InvalidArgument("episode " + e.id + " references unknown scene " + e.scene_id);
      std::set<std::string> regions, categories;
      for (const auto& names : e.point_regions) regions.insert(names.begin(), names.end());
      for (const auto& o : filter_objects_for_floor(it->second->objects, e.path.agent_height))
        categories.insert(o.category);
      ++st.size;
      st.avg_points += double(e.path.size());
      st.avg_regions += double(regions.size());
      st.avg_objects += double(categories.size());
    }
    if (st.size) {
      st.avg_points /= double(st.size);
      st.avg_regions /= double(st.size);
      st.avg_objects /= double(st.size);
    }
    out.push_back(st);
  }
  return out;
}

std::string format_stats(const std::vector<SplitStats>& stats) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-11s %7s %15s %16s %16s\n", "split", "size", "Avg. # points", "Avg. # regions",
                "Avg. # objects");
  os << line;
  for (const auto& s : stats) {
    std::string name(to_string(s.split));
    std::replace(name.begin(), name.end(), '_', ' ');
    std::snprintf(line, sizeof line, "%-11s %7zu %15.2f %16.2f %16.2f\n", name.c_str(), s.size, s.avg_points,
                  s.avg_regions, s.avg_objects);
    os << line;
  }
  return os.str();
}

}  // namespace vlgen
