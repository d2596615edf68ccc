#include "vlgen/prompt.hpp"

#include <algorithm>
#include <cmath>

#include "vlgen/error.hpp"
#include "vlgen/geometry.hpp"
#include "vlgen/kv_config.hpp"

namespace vlgen {
namespace {

constexpr std::string_view kObjectsSlot = "[objects]";
constexpr std::string_view kRegionsSlot = "[regions]";
constexpr std::string_view kInstructionSlot = "[instruction]";

// Replaces `slot` with `value`; an empty value also removes one preceding space.
void fill_slot(std::string& text, std::string_view slot, const std::string& value) {
  auto pos = text.find(slot);
  if (pos == std::string::npos) return;
  if (value.empty()) {
    std::size_t start = pos;
    if (start > 0 && text[start - 1] == ' ') --start;
    text.erase(start, pos + slot.size() - start);
  } else {
    text.replace(pos, slot.size(), value);
  }
}

double distance_to_rect(Vec2 p, const Rect& r) {
  const double dx = std::max({r.min.x - p.x, 0.0, p.x - r.max.x});
  const double dy = std::max({r.min.y - p.y, 0.0, p.y - r.max.y});
  return std::hypot(dx, dy);
}

}  // namespace

PromptTemplate PromptTemplate::load(const std::filesystem::path& file) {
  const auto cfg = KeyValueConfig::load(file);
  PromptTemplate t;
  t.text = cfg.get_string("prompt.template", t.text);
  t.object_prefix = cfg.get_string("prompt.object_prefix", t.object_prefix);
  t.region_pattern = cfg.get_string("prompt.region_pattern", t.region_pattern);
  if (t.region_pattern.find("{name}") == std::string::npos)
    throw SchemaError(file.string() + ": prompt.region_pattern must contain {name}");
  return t;
}

std::string PromptTemplate::head() const {
  auto end = std::min({text.find(kObjectsSlot), text.find(kRegionsSlot), text.find(kInstructionSlot)});
  std::string h = text.substr(0, end);
  while (!h.empty() && (h.back() == ' ' || h.back() == ',')) h.pop_back();
  return h;
}

std::string PromptTemplate::render(const std::vector<std::string>& objects, const std::string& region) const {
  std::string obj;
  if (!objects.empty()) {
    obj = object_prefix;
    for (std::size_t i = 0; i < objects.size(); ++i) obj += (i ? " " : "") + objects[i];
  }
  std::string reg;
  if (!region.empty()) {
    reg = region_pattern;
    reg.replace(reg.find("{name}"), 6, region);
  }
  std::string out = text;
  fill_slot(out, kObjectsSlot, obj);
  fill_slot(out, kRegionsSlot, reg);
  if (auto pos = out.find(kInstructionSlot); pos != std::string::npos) out.erase(pos);
  return out;
}

std::vector<std::string> nearby_object_categories(const Scene& scene, Vec2 point, double agent_height,
                                                  const PromptOptions& options) {
  const auto objects = filter_objects_for_floor(scene.objects, agent_height);
  std::vector<std::pair<double, std::size_t>> near;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const double d = distance_to_rect(point, objects[i].footprint());
    if (d <= options.near_threshold) near.emplace_back(d, i);
  }
  std::stable_sort(near.begin(), near.end(), [](auto& a, auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto [d, i] : near) {
    if (out.size() >= options.max_objects) break;
    const auto& cat = objects[i].category;
    if (std::find(out.begin(), out.end(), cat) == out.end()) out.push_back(cat);
  }
  return out;
}

std::string build_prompt(const Episode& episode, const Scene& scene, const PromptOptions& options,
                         const PromptTemplate& tmpl) {
  if (episode.path.points.empty()) throw InvalidArgument("build_prompt: episode path is empty");
  const Vec2 start = episode.path.points.front();
  auto objects = nearby_object_categories(scene, start, episode.path.agent_height, options);
  std::string region;
  if (!episode.point_regions.empty() && !episode.point_regions.front().empty())
    region = episode.point_regions.front().front();
  return tmpl.render(objects, region);
}

}  // namespace vlgen
