#include "vlgen/scene.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vlgen/error.hpp"
#include "vlgen/log.hpp"
#include "vlgen/palette.hpp"

namespace vlgen {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Field-path aware accessors. Every failure names the field.
const json& member(const json& obj, const std::string& where, const char* key) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + "." + key + ": missing required field");
  return *it;
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) throw SchemaError(field + ": expected a string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw SchemaError(field + ": expected a number");
  return v.get<double>();
}

std::vector<double> as_numbers(const json& v, const std::string& field, std::size_t n) {
  if (!v.is_array() || v.size() != n)
    throw SchemaError(field + ": expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Vec2 as_vec2(const json& v, const std::string& field) {
  auto n = as_numbers(v, field, 2);
  return {n[0], n[1]};
}

Vec3 as_vec3(const json& v, const std::string& field) {
  auto n = as_numbers(v, field, 3);
  return {n[0], n[1], n[2]};
}

const json& as_array(const json& v, const std::string& field) {
  if (!v.is_array()) throw SchemaError(field + ": expected an array");
  return v;
}

void warn_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) warn("ignoring unknown field " + where + "." + it.key());
  }
}

json vec(Vec2 v) { return json::array({v.x, v.y}); }
json vec(Vec3 v) { return json::array({v.x, v.y, v.z}); }

std::string index_field(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

}  // namespace

const Region* Scene::find_region(std::string_view name) const {
  for (const auto& r : regions)
    if (r.name == name) return &r;
  return nullptr;
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::kLeft: return "LEFT";
    case Action::kRight: return "RIGHT";
    case Action::kStraight: return "STRAIGHT";
    case Action::kStop: return "STOP";
  }
  return "?";
}

Action parse_action(std::string_view s) {
  if (s == "LEFT") return Action::kLeft;
  if (s == "RIGHT") return Action::kRight;
  if (s == "STRAIGHT") return Action::kStraight;
  if (s == "STOP") return Action::kStop;
  throw SchemaError("unknown action '" + std::string(s) + "' (expected LEFT, RIGHT, STRAIGHT, STOP)");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValSeen: return "val_seen";
    case Split::kValUnseen: return "val_unseen";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val_seen") return Split::kValSeen;
  if (s == "val_unseen") return Split::kValUnseen;
  throw SchemaError("unknown split '" + std::string(s) + "' (expected train, val_seen, val_unseen)");
}

void validate(const Scene& scene) {
  if (!(scene.bounds.width() > 0 && scene.bounds.height() > 0))
    throw SchemaError("bounds: must have positive width and height");
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    const auto f = index_field("objects", i);
    if (!is_known_category(o.category)) {
      auto cats = Palette::categories();
      for (auto e : kExcludedCategories)
        if (!Palette::is_category(e)) cats.emplace_back(e);
      throw SchemaError(f + ".category: unknown category '" + o.category +
                        "'; valid categories: " + join(cats, ", "));
    }
    if (!(o.extents.x > 0 && o.extents.y > 0 && o.extents.z > 0))
      throw SchemaError(f + ".extents: must be strictly positive");
    if (!scene.bounds.contains({o.center.x, o.center.y}))
      throw SchemaError(f + ".center: outside scene bounds");
  }
  for (std::size_t i = 0; i < scene.regions.size(); ++i) {
    const auto& r = scene.regions[i];
    const auto f = index_field("regions", i);
    if (r.name.empty()) throw SchemaError(f + ".name: must be non-empty");
    if (!(r.extents.x > 0 && r.extents.y > 0)) throw SchemaError(f + ".extents: must be strictly positive");
    if (!scene.bounds.contains(r.center)) throw SchemaError(f + ".center: outside scene bounds");
  }
  if (scene.navigable_polygons) {
    for (std::size_t i = 0; i < scene.navigable_polygons->size(); ++i)
      if ((*scene.navigable_polygons)[i].size() < 3)
        throw SchemaError(index_field("navigable_polygons", i) + ": polygon needs at least 3 vertices");
  }
}

void validate(const NavPath& path, std::string_view field) {
  const std::string f(field);
  if (path.points.size() < 2) throw SchemaError(f + ".points: needs at least 2 points");
  for (std::size_t k = 1; k < path.points.size(); ++k)
    if (path.points[k] == path.points[k - 1])
      throw SchemaError(f + ".points[" + std::to_string(k) + "]: repeats the previous point");
}

void validate(const Episode& e) {
  validate(e.path);
  const auto k = e.path.size();
  if (e.actions.size() != k) throw SchemaError("actions: length must equal the number of path points");
  if (e.point_regions.size() != k) throw SchemaError("point_regions: length must equal the number of path points");
  if (e.actions.back() != Action::kStop) throw SchemaError("actions: final action must be STOP");
  if (e.references.empty()) throw SchemaError("references: at least one reference instruction required");
  if (e.panorama_paths && e.panorama_paths->size() != k)
    throw SchemaError("panoramas: length must equal the number of path points");
}

json to_json(const Scene& s) {
  json objects = json::array();
  for (const auto& o : s.objects)
    objects.push_back({{"id", o.id}, {"category", o.category}, {"center", vec(o.center)}, {"extents", vec(o.extents)}});
  json regions = json::array();
  for (const auto& r : s.regions)
    regions.push_back({{"id", r.id}, {"name", r.name}, {"center", vec(r.center)}, {"extents", vec(r.extents)}});
  json doc = {{"id", s.id},
              {"bounds", {{"min", vec(s.bounds.min)}, {"max", vec(s.bounds.max)}}},
              {"objects", objects},
              {"regions", regions}};
  if (s.navigable_polygons) {
    json polys = json::array();
    for (const auto& poly : *s.navigable_polygons) {
      json p = json::array();
      for (auto v : poly) p.push_back(vec(v));
      polys.push_back(p);
    }
    doc["navigable_polygons"] = polys;
  }
  return doc;
}

Scene scene_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("scene: expected a JSON object");
  warn_unknown(doc, "scene", {"id", "bounds", "objects", "regions", "navigable_polygons"});
  Scene s;
  s.id = as_string(member(doc, "scene", "id"), "id");
  const auto& b = member(doc, "scene", "bounds");
  s.bounds = {as_vec2(member(b, "bounds", "min"), "bounds.min"), as_vec2(member(b, "bounds", "max"), "bounds.max")};

  const auto& objs = as_array(member(doc, "scene", "objects"), "objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const auto f = index_field("objects", i);
    const auto& o = objs[i];
    if (!o.is_object()) throw SchemaError(f + ": expected an object");
    warn_unknown(o, f, {"id", "category", "center", "extents"});
    s.objects.push_back({as_string(member(o, f, "id"), f + ".id"), as_string(member(o, f, "category"), f + ".category"),
                         as_vec3(member(o, f, "center"), f + ".center"),
                         as_vec3(member(o, f, "extents"), f + ".extents")});
  }
  const auto& regs = as_array(member(doc, "scene", "regions"), "regions");
  for (std::size_t i = 0; i < regs.size(); ++i) {
    const auto f = index_field("regions", i);
    const auto& r = regs[i];
    if (!r.is_object()) throw SchemaError(f + ": expected an object");
    warn_unknown(r, f, {"id", "name", "center", "extents"});
    s.regions.push_back({as_string(member(r, f, "id"), f + ".id"), as_string(member(r, f, "name"), f + ".name"),
                         as_vec2(member(r, f, "center"), f + ".center"),
                         as_vec2(member(r, f, "extents"), f + ".extents")});
  }
  if (auto it = doc.find("navigable_polygons"); it != doc.end()) {
    const auto& polys = as_array(*it, "navigable_polygons");
    std::vector<Polygon> out;
    for (std::size_t i = 0; i < polys.size(); ++i) {
      const auto f = index_field("navigable_polygons", i);
      Polygon poly;
      const auto& verts = as_array(polys[i], f);
      for (std::size_t j = 0; j < verts.size(); ++j) poly.push_back(as_vec2(verts[j], index_field(f, j)));
      out.push_back(std::move(poly));
    }
    s.navigable_polygons = std::move(out);
  }
  validate(s);
  return s;
}

json to_json(const Episode& e) {
  json points = json::array();
  for (auto p : e.path.points) points.push_back(vec(p));
  json actions = json::array();
  for (auto a : e.actions) actions.push_back(std::string(to_string(a)));
  json doc = {{"id", e.id},
              {"scene_id", e.scene_id},
              {"split", std::string(to_string(e.split))},
              {"path", {{"points", points}, {"agent_height", e.path.agent_height}}},
              {"map_image", e.map_image_path},
              {"point_regions", e.point_regions},
              {"actions", actions},
              {"prompt", e.prompt},
              {"references", e.references}};
  if (e.panorama_paths) doc["panoramas"] = *e.panorama_paths;
  return doc;
}

Episode episode_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("episode: expected a JSON object");
  warn_unknown(doc, "episode", {"id", "scene_id", "split", "path", "map_image", "point_regions", "actions", "prompt",
                                "references", "panoramas"});
  Episode e;
  e.id = as_string(member(doc, "episode", "id"), "id");
  e.scene_id = as_string(member(doc, "episode", "scene_id"), "scene_id");
  e.split = parse_split(as_string(member(doc, "episode", "split"), "split"));
  const auto& p = member(doc, "episode", "path");
  const auto& pts = as_array(member(p, "path", "points"), "path.points");
  for (std::size_t i = 0; i < pts.size(); ++i) e.path.points.push_back(as_vec2(pts[i], index_field("path.points", i)));
  e.path.agent_height = as_number(member(p, "path", "agent_height"), "path.agent_height");
  e.map_image_path = as_string(member(doc, "episode", "map_image"), "map_image");
  const auto& pr = as_array(member(doc, "episode", "point_regions"), "point_regions");
  for (std::size_t i = 0; i < pr.size(); ++i) {
    std::vector<std::string> names;
    const auto f = index_field("point_regions", i);
    const auto& list = as_array(pr[i], f);
    for (std::size_t j = 0; j < list.size(); ++j) names.push_back(as_string(list[j], index_field(f, j)));
    e.point_regions.push_back(std::move(names));
  }
  const auto& acts = as_array(member(doc, "episode", "actions"), "actions");
  for (std::size_t i = 0; i < acts.size(); ++i)
    e.actions.push_back(parse_action(as_string(acts[i], index_field("actions", i))));
  e.prompt = as_string(member(doc, "episode", "prompt"), "prompt");
  const auto& refs = as_array(member(doc, "episode", "references"), "references");
  for (std::size_t i = 0; i < refs.size(); ++i) e.references.push_back(as_string(refs[i], index_field("references", i)));
  if (auto it = doc.find("panoramas"); it != doc.end()) {
    std::vector<std::string> panos;
    const auto& list = as_array(*it, "panoramas");
    for (std::size_t i = 0; i < list.size(); ++i) panos.push_back(as_string(list[i], index_field("panoramas", i)));
    e.panorama_paths = std::move(panos);
  }
  validate(e);
  return e;
}

std::string serialize_scene(const Scene& scene) { return to_json(scene).dump(2) + "\n"; }

Scene load_scene(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open scene file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw SchemaError(file.string() + ": JSON parse error: " + ex.what());
  }
  try {
    return scene_from_json(doc);
  } catch (const SchemaError& ex) {
    throw SchemaError(file.string() + ": " + ex.what());
  }
}

void save_scene(const Scene& scene, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write scene file " + file.string());
  out << serialize_scene(scene);
}

std::string serialize_episode_line(const Episode& episode) { return to_json(episode).dump() + "\n"; }

std::vector<Episode> load_episodes(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw Error("cannot open episode file " + jsonl.string());
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_from_json(json::parse(line)));
    } catch (const json::parse_error& ex) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": JSON parse error: " + ex.what());
    } catch (const SchemaError& ex) {
      throw SchemaError(jsonl.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& jsonl) {
  std::ofstream out(jsonl, std::ios::binary);
  if (!out) throw Error("cannot write episode file " + jsonl.string());
  for (const auto& e : episodes) out << serialize_episode_line(e);
}

}  // namespace vlgen
