// vlgen: build-dataset, train, generate, evaluate, significance, serve.

#include <signal.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "run_config.hpp"
#include "vlgen/captioner/checkpoint.hpp"
#include "vlgen/captioner/trainer.hpp"
#include "vlgen/error.hpp"
#include "vlgen/eval/io.hpp"
#include "vlgen/eval/report.hpp"
#include "vlgen/log.hpp"
#include "vlgen/service/eval_service.hpp"
#include "vlgen/service/http_server.hpp"

namespace fs = std::filesystem;
using namespace vlgen;
using namespace vlgen::cli;

namespace {

// Shared by every subcommand.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  std::string run_dir;
  std::string variant;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "Run configuration file (key = value)")->check(CLI::ExistingFile);
    app->add_option("--set", set, "Override a config key: key=value (repeatable)");
    app->add_option("--seed", seed, "Random seed (overrides the file)");
    app->add_option("--run-dir", run_dir, "Run directory (overrides the file)");
    app->add_option("--variant", variant, "Model variant, e.g. TD+Reg+Act+P");
  }

  RunConfig resolve() const {
    KeyValueConfig kv = config_file.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_file);
    apply_overrides(kv, set);
    if (seed) kv.set("seed", std::to_string(*seed));
    if (!run_dir.empty()) kv.set("run_dir", run_dir);
    if (!variant.empty()) kv.set("variant", variant);
    return RunConfig::resolve(std::move(kv));
  }
};

std::vector<Episode> load_dataset(const RunConfig& run) {
  if (!fs::exists(run.episodes_file()))
    throw Error(run.episodes_file().string() + " not found; run build-dataset first");
  return load_episodes(run.episodes_file());
}

std::vector<Episode> select_split(const std::vector<Episode>& episodes, const std::string& split) {
  std::vector<Episode> out;
  for (const auto& e : episodes) {
    const bool keep = split == "all" || (split == "val" && e.split != Split::kTrain) ||
                      (split != "all" && split != "val" && e.split == parse_split(split));
    if (keep) out.push_back(e);
  }
  return out;
}

int build_dataset(const RunConfig& run) {
  const EpisodeOptions options = run.episode_options();
  const std::string source = run.kv.get_string("dataset.source", "synthetic");
  fs::remove_all(run.dataset_dir());
  fs::create_directories(run.dataset_dir());
  Corpus corpus;
  if (source == "synthetic") {
    corpus = build_synthetic_corpus(run.seed, run.corpus_spec(), run.dataset_dir(), options);
  } else if (source == "files") {
    const auto scenes_dir = run.kv.get("dataset.scenes");
    const auto paths_file = run.kv.get("dataset.paths");
    if (!scenes_dir || !paths_file) throw InvalidArgument("dataset.source = files needs dataset.scenes and dataset.paths");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*scenes_dir))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<Scene> scenes;
    for (const auto& f : files) scenes.push_back(load_scene(f));
    corpus = build_corpus_from_files(scenes, load_path_records(*paths_file), run.dataset_dir(), options);
  } else {
    throw InvalidArgument("dataset.source must be synthetic or files, got '" + source + "'");
  }
  std::cout << format_stats(corpus_stats(corpus.scenes, corpus.episodes));
  std::cout << "wrote " << corpus.episodes.size() << " episodes to " << run.episodes_file().string() << "\n";
  record_step(run, "build-dataset", {run.episodes_file()}, {{"episodes", corpus.episodes.size()}});
  return 0;
}

int train_command(const RunConfig& run) {
  using namespace captioner;
  const CaptionerConfig config = run.captioner_config();
  const auto episodes = load_dataset(run);
  const auto train_eps = select_split(episodes, "train");
  const auto val_eps = select_split(episodes, "val");
  if (train_eps.empty()) throw InvalidArgument("the dataset has no training episodes");
  const Vocabulary vocab = build_vocabulary(train_eps);
  SampleOptions so;
  so.load_panoramas = config.flags.pano;
  const auto train_samples = prepare_samples(train_eps, run.dataset_dir(), vocab, config, so);
  const auto val_samples = prepare_samples(val_eps, run.dataset_dir(), vocab, config, so);

  const fs::path dir = run.train_dir(variant_name(config.flags));
  fs::create_directories(dir);
  std::ofstream(dir / "config.cfg") << run.kv.dump();
  TrainOptions options;
  options.metrics_csv = dir / "metrics.csv";
  options.checkpoint = dir / "model.ckpt";
  options.on_epoch = [](const EpochMetrics& m) {
    std::cout << "epoch " << m.epoch << "  gen " << m.gen_loss << "  con " << m.con_loss << "  val " << m.val_loss
              << std::endl;
  };
  std::cout << variant_name(config.flags) << ": " << train_samples.size() << " training samples, "
            << val_samples.size() << " validation samples, vocabulary " << vocab.size() << "\n";
  CaptionerModel model(config, vocab);
  const auto result = train(model, train_samples, val_samples, options);
  std::cout << "best epoch " << result.best_epoch << ", checkpoint " << options.checkpoint.string() << "\n";
  record_step(run, "train/" + variant_name(config.flags), {options.checkpoint, options.metrics_csv, dir / "config.cfg"},
              {{"best_epoch", result.best_epoch}});
  return 0;
}

int generate_command(const RunConfig& run, const std::string& checkpoint_arg, const std::string& split,
                     const std::string& system_arg, const std::string& out_arg) {
  using namespace captioner;
  const fs::path checkpoint = checkpoint_arg.empty() ? run.train_dir(run.variant()) / "model.ckpt" : fs::path(checkpoint_arg);
  const auto model = load_checkpoint(checkpoint);
  const auto& config = model->config();
  const std::string system = system_arg.empty() ? variant_name(config.flags) : system_arg;
  const auto episodes = select_split(load_dataset(run), split);
  if (episodes.empty()) throw InvalidArgument("no episodes in split '" + split + "'");

  std::vector<eval::Generation> out(episodes.size());
  std::vector<std::string> errors(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    try {
      const Sample s = prepare_sample(episodes[i], run.dataset_dir(), model->vocab(), config, 0, config.flags.pano);
      out[i] = {episodes[i].id, system, model->generate(s, config.flags.prompt)};
    } catch (const std::exception& e) {
      errors[i] = episodes[i].id + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);
  const fs::path file = out_arg.empty() ? run.generations_dir() / (system + ".jsonl") : fs::path(out_arg);
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  eval::save_generations(out, file);
  std::cout << "wrote " << out.size() << " generations to " << file.string() << "\n";
  if (out_arg.empty()) record_step(run, "generate/" + system, {file});
  return 0;
}

// Generation files in the run directory, in the canonical variant order.
std::vector<fs::path> default_generation_files(const RunConfig& run) {
  std::vector<fs::path> files;
  if (fs::exists(run.generations_dir()))
    for (const auto& entry : fs::directory_iterator(run.generations_dir()))
      if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  const auto order = captioner::variant_names();
  auto rank = [&](const fs::path& p) {
    const auto it = std::find(order.begin(), order.end(), p.stem().string());
    return std::pair{it - order.begin(), p.stem().string()};
  };
  std::sort(files.begin(), files.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
  if (files.empty()) throw Error("no generations found in " + run.generations_dir().string());
  return files;
}

std::vector<eval::Generation> load_all(const std::vector<fs::path>& files) {
  std::vector<eval::Generation> all;
  for (const auto& f : files) {
    auto g = eval::load_generations(f);
    all.insert(all.end(), g.begin(), g.end());
  }
  return all;
}

std::vector<fs::path> to_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

int evaluate_command(const RunConfig& run, const std::vector<std::string>& generation_args, const std::string& human) {
  const auto files = generation_args.empty() ? default_generation_files(run) : to_paths(generation_args);
  const auto episodes = load_dataset(run);
  const auto generations = load_all(files);

  const std::string metric = run.kv.get_string("eval.metric", "proposition_f1");
  std::unique_ptr<eval::Scorer> scorer;
  if (metric == "proposition_f1")
    scorer = std::make_unique<eval::PropositionF1Scorer>(eval::lexicon_for(episodes));
  else if (metric == "bleu")
    scorer = std::make_unique<eval::BleuScorer>();
  else if (metric.starts_with("imported:"))
    scorer = std::make_unique<eval::ImportedScorer>(eval::ImportedScorer::load(metric.substr(9)));
  else
    throw InvalidArgument("eval.metric must be proposition_f1, bleu or imported:<csv>, got '" + metric + "'");

  std::optional<std::vector<eval::HumanScore>> human_scores;
  if (!human.empty()) human_scores = eval::load_human_scores(human);
  eval::EvaluateOptions options;
  options.permutation.seed = run.seed;
  options.permutation.resamples = std::size_t(run.kv.get_int("eval.resamples", 10000));
  const auto report = eval::evaluate_systems(generations, episodes, *scorer, human_scores, options);

  fs::create_directories(run.eval_dir());
  const fs::path report_file = run.eval_dir() / "report.json", table_file = run.eval_dir() / "table.txt",
                 scores_file = run.eval_dir() / "scores.csv";
  std::ofstream(report_file) << eval::to_json(report).dump(2) << '\n';
  const std::string table = eval::render_table(report);
  std::ofstream(table_file) << table;
  {
    std::ofstream scores(scores_file);
    scores.precision(17);
    scores << "episode_id,system_id,score\n";
    for (const auto& e : report.examples)
      scores << eval::csv_field(e.episode_id) << ',' << eval::csv_field(e.system_id) << ',' << e.score << '\n';
  }
  std::cout << table;
  for (const auto& [split, m] : report.pvalues)
    std::cout << "\np-values (" << to_string(split) << ")\n" << eval::render_pvalue_matrix(m);
  record_step(run, "evaluate", {report_file, table_file, scores_file});
  return 0;
}

int significance_command(const RunConfig& run, const std::string& scores_arg) {
  const fs::path file = scores_arg.empty() ? run.eval_dir() / "scores.csv" : fs::path(scores_arg);
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::string line;
  std::getline(in, line);
  const auto header = eval::split_csv_line(line);
  if (header != std::vector<std::string>{"episode_id", "system_id", "score"})
    throw SchemaError(file.string() + ": expected header episode_id,system_id,score");
  std::vector<std::pair<std::string, std::vector<double>>> samples;
  std::map<std::string, std::size_t> index;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const auto f = eval::split_csv_line(line);
    if (f.size() != 3) throw SchemaError(file.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    double score;
    try {
      score = std::stod(f[2]);
    } catch (const std::exception&) {
      throw SchemaError(file.string() + ":" + std::to_string(lineno) + ": score '" + f[2] + "' is not a number");
    }
    auto [it, added] = index.try_emplace(f[1], samples.size());
    if (added) samples.push_back({f[1], {}});
    samples[it->second].second.push_back(score);
  }
  if (samples.empty()) throw SchemaError(file.string() + ": no scores");
  eval::PermutationOptions options;
  options.seed = run.seed;
  options.resamples = std::size_t(run.kv.get_int("eval.resamples", 10000));
  const auto m = eval::pairwise_pvalues(samples, options);
  std::cout << eval::render_pvalue_matrix(m);
  nlohmann::json j{{"systems", m.systems}, {"p", m.p}};
  fs::create_directories(run.eval_dir());
  const fs::path out = run.eval_dir() / "pvalues.json";
  std::ofstream(out) << j.dump(2) << '\n';
  record_step(run, "significance", {out});
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  return out;
}

int serve_command(const RunConfig& run, const std::vector<std::string>& generation_args) {
  const auto files = generation_args.empty() ? default_generation_files(run) : to_paths(generation_args);
  service::ServiceConfig config;
  config.evaluators = split_list(run.kv.get_string("serve.evaluators", "e1,e2,e3,e4,e5"));
  config.items_per_evaluator = std::size_t(run.kv.get_int("serve.items_per_evaluator", 15));
  config.seed = run.seed;
  config.log_path = run.run_dir / "human" / "responses.jsonl";
  fs::create_directories(config.log_path.parent_path());
  service::EvalService svc(load_dataset(run), service::group_generations(load_all(files)), config);

  std::optional<fs::path> ui;
  if (auto dir = run.kv.get("serve.ui_dir")) ui = *dir;
  service::HttpServer server(svc, run.dataset_dir(), ui);
  const std::string host = run.kv.get_string("serve.host", "127.0.0.1");
  const int port = server.bind(host, int(run.kv.get_int("serve.port", 8080)));

  // Stop cleanly on SIGINT/SIGTERM: the signals are waited for on a side
  // thread instead of handled asynchronously.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cout << "serving " << svc.items().size() << " items x " << svc.systems().size() << " systems for "
            << config.evaluators.size() << " evaluators on http://" << host << ":" << port << std::endl;
  record_step(run, "serve", {config.log_path}, {{"port", port}});
  try {
    server.listen();
  } catch (...) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    throw;
  }
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navigation instruction generation toolkit"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string checkpoint, split = "val", system, output, human, scores;
  std::vector<std::string> generations;

  auto* build = app.add_subcommand("build-dataset", "Scenes to episodes, maps and prompts");
  common.attach(build);
  auto* train = app.add_subcommand("train", "Train one model variant");
  common.attach(train);
  auto* generate = app.add_subcommand("generate", "Generate instructions with a trained checkpoint");
  common.attach(generate);
  generate->add_option("--checkpoint", checkpoint, "Checkpoint (default: the variant's in the run directory)");
  generate->add_option("--split", split, "train, val_seen, val_unseen, val (both) or all")
      ->check(CLI::IsMember({"train", "val_seen", "val_unseen", "val", "all"}));
  generate->add_option("--system", system, "System id written to the generations (default: variant)");
  generate->add_option("-o,--output", output, "Output JSONL (default: generations/<system>.jsonl)");
  auto* evaluate = app.add_subcommand("evaluate", "Score generations and test significance");
  common.attach(evaluate);
  evaluate->add_option("--generations", generations, "Generation JSONL files; the first is the baseline");
  evaluate->add_option("--human", human, "Human scores CSV (e.g. the service export)");
  auto* significance = app.add_subcommand("significance", "Pairwise permutation tests over a scores CSV");
  common.attach(significance);
  significance->add_option("--scores", scores, "CSV with episode_id,system_id,score (default: eval/scores.csv)");
  auto* serve = app.add_subcommand("serve", "Start the human evaluation service");
  common.attach(serve);
  serve->add_option("--generations", generations, "Generation JSONL files, one system each");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig run = common.resolve();
    if (*build) return build_dataset(run);
    if (*train) return train_command(run);
    if (*generate) return generate_command(run, checkpoint, split, system, output);
    if (*evaluate) return evaluate_command(run, generations, human);
    if (*significance) return significance_command(run, scores);
    if (*serve) return serve_command(run, generations);
  } catch (const InvalidArgument& e) {
    std::cerr << "vlgen: invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "vlgen: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
