#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vlgen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

// Axis-aligned rectangle in world meters.
struct Rect {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double area() const { return width() * height(); }
  bool contains(Vec2 p) const { return min.x <= p.x && p.x <= max.x && min.y <= p.y && p.y <= max.y; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// 3D box: center (x, y, h) and full widths (w_x, w_y, w_h).
struct SceneObject {
  std::string id;
  std::string category;
  Vec3 center;
  Vec3 extents;

  Rect footprint() const {
    return {{center.x - extents.x / 2, center.y - extents.y / 2},
            {center.x + extents.x / 2, center.y + extents.y / 2}};
  }
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Region {
  std::string id;
  std::string name;
  Vec2 center;
  Vec2 extents;

  Rect area() const {
    return {{center.x - extents.x / 2, center.y - extents.y / 2},
            {center.x + extents.x / 2, center.y + extents.y / 2}};
  }
  friend bool operator==(const Region&, const Region&) = default;
};

using Polygon = std::vector<Vec2>;

struct Scene {
  std::string id;
  std::vector<SceneObject> objects;
  std::vector<Region> regions;
  Rect bounds;
  std::optional<std::vector<Polygon>> navigable_polygons;

  const Region* find_region(std::string_view name) const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

struct NavPath {
  std::vector<Vec2> points;
  double agent_height = 0.0;

  std::size_t size() const { return points.size(); }
  friend bool operator==(const NavPath&, const NavPath&) = default;
};

enum class Action { kLeft, kRight, kStraight, kStop };

std::string_view to_string(Action a);
Action parse_action(std::string_view s);

enum class Split { kTrain, kValSeen, kValUnseen };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct Episode {
  std::string id;
  std::string scene_id;
  NavPath path;
  std::string map_image_path;  // relative to the episode file's directory
  std::vector<std::vector<std::string>> point_regions;
  std::vector<Action> actions;
  std::string prompt;
  std::vector<std::string> references;
  std::optional<std::vector<std::string>> panorama_paths;
  Split split = Split::kTrain;

  friend bool operator==(const Episode&, const Episode&) = default;
};

// Invariant checks; throw SchemaError naming the field.
void validate(const Scene& scene);
void validate(const NavPath& path, std::string_view field = "path");
void validate(const Episode& episode);

nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Episode& episode);
Episode episode_from_json(const nlohmann::json& doc);

// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string serialize_scene(const Scene& scene);

Scene load_scene(const std::filesystem::path& file);
void save_scene(const Scene& scene, const std::filesystem::path& file);

std::vector<Episode> load_episodes(const std::filesystem::path& jsonl);
void save_episodes(const std::vector<Episode>& episodes, const std::filesystem::path& jsonl);
std::string serialize_episode_line(const Episode& episode);

}  // namespace vlgen
