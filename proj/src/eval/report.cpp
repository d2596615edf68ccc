#include "vlgen/eval/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "vlgen/error.hpp"

namespace vlgen::eval {

double PValueMatrix::at(const std::string& a, const std::string& b) const {
  auto ia = std::find(systems.begin(), systems.end(), a);
  auto ib = std::find(systems.begin(), systems.end(), b);
  if (ia == systems.end() || ib == systems.end()) throw InvalidArgument("unknown system in p-value lookup");
  return p[ia - systems.begin()][ib - systems.begin()];
}

std::string significance_stars(double p) {
  if (p <= 0.01) return "**";
  if (p <= 0.05) return "*";
  return "";
}

PValueMatrix pairwise_pvalues(const std::vector<std::pair<std::string, std::vector<double>>>& samples,
                              const PermutationOptions& options) {
  PValueMatrix m;
  const std::size_t n = samples.size();
  for (const auto& s : samples) m.systems.push_back(s.first);
  m.p.assign(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = permutation_test(samples[i].second, samples[j].second, options).p_value;
      m.p[i][j] = m.p[j][i] = p;
    }
  return m;
}

Lexicon lexicon_for(const std::vector<Episode>& episodes) {
  std::set<std::string> names;
  for (const auto& e : episodes)
    for (const auto& pr : e.point_regions) names.insert(pr.begin(), pr.end());
  std::vector<std::string> list(names.begin(), names.end());
  return Lexicon::standard(list);
}

EvalReport evaluate_systems(const std::vector<Generation>& generations, const std::vector<Episode>& episodes,
                            const Scorer& scorer, const std::optional<std::vector<HumanScore>>& human,
                            const EvaluateOptions& options) {
  std::map<std::string, const Episode*> by_id;
  for (const auto& e : episodes) by_id[e.id] = &e;

  EvalReport rep;
  rep.metric = scorer.name();
  std::map<std::string, std::set<std::string>> covered;
  for (const auto& g : generations) {
    if (!by_id.contains(g.episode_id))
      throw InvalidArgument("generation for unknown episode '" + g.episode_id + "' (system " + g.system_id + ")");
    if (!covered.contains(g.system_id)) rep.systems.push_back(g.system_id);
    if (!covered[g.system_id].insert(g.episode_id).second)
      throw InvalidArgument("system " + g.system_id + " has two generations for episode " + g.episode_id);
  }
  if (rep.systems.empty()) throw InvalidArgument("no generations to evaluate");
  const auto& reference_set = covered[rep.systems.front()];
  for (const auto& s : rep.systems)
    if (covered[s] != reference_set)
      throw InvalidArgument("episode-set mismatch: system " + s + " covers " + std::to_string(covered[s].size()) +
                            " episodes, " + rep.systems.front() + " covers " + std::to_string(reference_set.size()) +
                            " (or a different set)");

  rep.examples.resize(generations.size());
  const long n = long(generations.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto& g = generations[i];
    const Episode& e = *by_id[g.episode_id];
    rep.examples[i] = {g.episode_id, g.system_id, e.split, scorer.score({g.episode_id, g.system_id, g.text, e.references})};
  }

  std::set<Split> present;
  std::map<std::string, std::map<Split, std::vector<double>>> samples;
  for (const auto& ex : rep.examples) {
    present.insert(ex.split);
    samples[ex.system_id][ex.split].push_back(ex.score);
  }
  rep.splits.assign(present.begin(), present.end());
  for (const auto& s : rep.systems)
    for (auto split : rep.splits) {
      const auto& v = samples[s][split];
      rep.scores[s][split] = {mean(v), v.size()};
    }
  for (auto split : rep.splits) {
    std::vector<std::pair<std::string, std::vector<double>>> per;
    for (const auto& s : rep.systems) per.emplace_back(s, samples[s][split]);
    rep.pvalues[split] = pairwise_pvalues(per, options.permutation);
  }

  if (human && !human->empty()) {
    HumanSummary hs;
    std::map<std::string, std::vector<double>> by_system;
    std::map<std::pair<std::string, std::string>, std::vector<double>> by_item;
    for (const auto& h : *human) {
      if (!by_id.contains(h.episode_id)) throw InvalidArgument("human score for unknown episode '" + h.episode_id + "'");
      by_system[h.system_id].push_back(h.score);
      by_item[{h.episode_id, h.system_id}].push_back(h.score);
    }
    std::vector<std::pair<std::string, std::vector<double>>> per;
    for (const auto& s : rep.systems)
      if (by_system.contains(s)) per.emplace_back(s, by_system[s]);
    for (const auto& [s, v] : by_system)
      if (std::find(rep.systems.begin(), rep.systems.end(), s) == rep.systems.end())
        throw InvalidArgument("human scores for system '" + s + "' which has no generations");
    for (const auto& [s, v] : per) {
      hs.mean[s] = mean(v);
      hs.count[s] = v.size();
    }
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [s, m] : hs.mean) order.emplace_back(-m, s);
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) hs.rank[order[i].second] = int(i + 1);
    hs.pvalues = pairwise_pvalues(per, options.permutation);

    std::map<std::pair<std::string, std::string>, double> metric;
    for (const auto& ex : rep.examples) metric[{ex.episode_id, ex.system_id}] = ex.score;
    std::vector<double> mx, hy;
    for (const auto& [key, v] : by_item) {
      mx.push_back(metric.at(key));
      hy.push_back(mean(v));
    }
    try {
      hs.kendall_tau_items = kendall_tau(mx, hy);
    } catch (const InvalidArgument&) {
    }
    std::vector<double> sx, sy;
    for (const auto& [s, m] : hs.mean) {
      std::vector<double> all;
      for (const auto& ex : rep.examples)
        if (ex.system_id == s) all.push_back(ex.score);
      sx.push_back(mean(all));
      sy.push_back(m);
    }
    try {
      hs.kendall_tau_systems = kendall_tau(sx, sy);
    } catch (const InvalidArgument&) {
    }
    rep.human = std::move(hs);
  }
  return rep;
}

namespace {

nlohmann::json matrix_json(const PValueMatrix& m) {
  return {{"systems", m.systems}, {"p", m.p}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json systems = nlohmann::json::array();
  for (const auto& s : r.systems) {
    nlohmann::json scores = nlohmann::json::object();
    for (auto split : r.splits) {
      const auto& sc = r.scores.at(s).at(split);
      nlohmann::json entry = {{"mean", sc.mean}, {"n", sc.n}};
      if (s != r.systems.front()) {
        const double p = r.pvalues.at(split).at(r.systems.front(), s);
        entry["p_vs_baseline"] = p;
        entry["stars"] = significance_stars(p);
      }
      scores[std::string(to_string(split))] = entry;
    }
    nlohmann::json row = {{"system", s}, {"scores", scores}};
    if (r.human && r.human->mean.contains(s))
      row["human"] = {{"mean", r.human->mean.at(s)}, {"n", r.human->count.at(s)}, {"rank", r.human->rank.at(s)}};
    systems.push_back(row);
  }
  nlohmann::json pvalues = nlohmann::json::object();
  for (const auto& [split, m] : r.pvalues) pvalues[std::string(to_string(split))] = matrix_json(m);
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& e : r.examples)
    examples.push_back({{"episode_id", e.episode_id}, {"system_id", e.system_id},
                        {"split", std::string(to_string(e.split))}, {"score", e.score}});
  nlohmann::json doc = {{"metric", r.metric}, {"systems", systems}, {"pvalues", pvalues}, {"examples", examples}};
  if (r.human) {
    nlohmann::json h = {{"pvalues", matrix_json(r.human->pvalues)}};
    h["kendall_tau_items"] = r.human->kendall_tau_items ? nlohmann::json(*r.human->kendall_tau_items) : nlohmann::json();
    h["kendall_tau_systems"] =
        r.human->kendall_tau_systems ? nlohmann::json(*r.human->kendall_tau_systems) : nlohmann::json();
    doc["human"] = h;
  }
  return doc;
}

std::string render_table(const EvalReport& r) {
  std::ostringstream os;
  char buf[256];
  std::size_t width = 6;
  for (const auto& s : r.systems) width = std::max(width, s.size());
  std::snprintf(buf, sizeof buf, "%-*s", int(width), "System");
  os << buf;
  for (auto split : r.splits) {
    std::snprintf(buf, sizeof buf, " | %12s", std::string(to_string(split)).c_str());
    os << buf;
  }
  if (r.human) os << " | Human Score";
  os << "\n" << std::string(width + r.splits.size() * 15 + (r.human ? 14 : 0), '-') << "\n";
  for (const auto& s : r.systems) {
    std::snprintf(buf, sizeof buf, "%-*s", int(width), s.c_str());
    os << buf;
    for (auto split : r.splits) {
      std::string stars;
      if (s != r.systems.front()) stars = significance_stars(r.pvalues.at(split).at(r.systems.front(), s));
      std::snprintf(buf, sizeof buf, " | %10.2f%-2s", 100.0 * r.scores.at(s).at(split).mean, stars.c_str());
      os << buf;
    }
    if (r.human) {
      if (r.human->mean.contains(s)) {
        std::string stars;
        if (s != r.systems.front() && r.human->mean.contains(r.systems.front()))
          stars = significance_stars(r.human->pvalues.at(r.systems.front(), s));
        std::snprintf(buf, sizeof buf, " | %4.2f%s (%d)", r.human->mean.at(s), stars.c_str(), r.human->rank.at(s));
      } else {
        std::snprintf(buf, sizeof buf, " | %11s", "-");
      }
      os << buf;
    }
    os << "\n";
  }
  os << "Metric: " << r.metric << " (x100). ** and * mark p<=0.01 and p<=0.05 against " << r.systems.front()
     << " (two-sided permutation test).\n";
  if (r.human) {
    if (r.human->kendall_tau_systems) {
      std::snprintf(buf, sizeof buf, "Kendall tau-b (system means, metric vs human): %.3f\n", *r.human->kendall_tau_systems);
      os << buf;
    }
    if (r.human->kendall_tau_items) {
      std::snprintf(buf, sizeof buf, "Kendall tau-b (items, metric vs human): %.3f\n", *r.human->kendall_tau_items);
      os << buf;
    }
  }
  return os.str();
}

std::string render_pvalue_matrix(const PValueMatrix& m) {
  std::ostringstream os;
  char buf[64];
  std::size_t width = 4;
  for (const auto& s : m.systems) width = std::max(width, s.size());
  os << std::string(width, ' ');
  for (const auto& s : m.systems) {
    std::snprintf(buf, sizeof buf, " %*s", int(std::max<std::size_t>(width, 8)), s.c_str());
    os << buf;
  }
  os << "\n";
  for (std::size_t i = 0; i < m.systems.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-*s", int(width), m.systems[i].c_str());
    os << buf;
    for (std::size_t j = 0; j < m.systems.size(); ++j) {
      std::snprintf(buf, sizeof buf, " %*.4f", int(std::max<std::size_t>(width, 8)) - 2, m.p[i][j]);
      os << buf << significance_stars(m.p[i][j]).append(2 - significance_stars(m.p[i][j]).size(), ' ');
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace vlgen::eval
