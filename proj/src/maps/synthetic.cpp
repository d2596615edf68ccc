#include "vlgen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "vlgen/error.hpp"
#include "vlgen/geometry.hpp"
#include "vlgen/palette.hpp"

namespace vlgen {
namespace {

struct RoomType {
  const char* name;
  std::vector<const char*> categories;
};

const std::vector<RoomType>& room_types() {
  static const std::vector<RoomType> types = {
      {"living room", {"sofa", "cushion", "table", "tv_monitor", "fireplace", "plant"}},
      {"kitchen", {"counter", "sink", "appliances", "cabinet", "stool"}},
      {"bedroom", {"bed", "chest_of_drawers", "clothes", "mirror", "lighting"}},
      {"bathroom", {"toilet", "bathtub", "shower", "towel", "sink"}},
      {"hallway", {"picture", "plant", "shelving", "railing", "door"}},
      {"dining room", {"table", "chair", "lighting", "cabinet"}},
      {"office", {"chair", "shelving", "tv_monitor", "board_panel"}},
      {"gym", {"gym_equipment", "mirror", "towel", "seating"}},
  };
  return types;
}

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Self-avoiding walk of `n` cells; restarts until it succeeds.
std::vector<Cell> grid_walk(Rng& rng, int n) {
  static constexpr Cell kSteps[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (;;) {
    std::vector<Cell> cells{{0, 0}};
    std::set<Cell> used{{0, 0}};
    while (int(cells.size()) < n) {
      std::vector<Cell> options;
      for (auto s : kSteps) {
        Cell c{cells.back().x + s.x, cells.back().y + s.y};
        if (!used.contains(c)) options.push_back(c);
      }
      if (options.empty()) break;
      Cell next = options[uniform_int(rng, 0, int(options.size()) - 1)];
      cells.push_back(next);
      used.insert(next);
    }
    if (int(cells.size()) == n) return cells;
  }
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double distance_to_rect(Vec2 p, const Rect& r) {
  const double dx = std::max({r.min.x - p.x, 0.0, p.x - r.max.x});
  const double dy = std::max({r.min.y - p.y, 0.0, p.y - r.max.y});
  return std::hypot(dx, dy);
}

// Nearest floor-filtered object to `p`, or nullptr.
const SceneObject* nearest_object(const std::vector<SceneObject>& objects, Vec2 p) {
  const SceneObject* best = nullptr;
  double best_d = 0;
  for (const auto& o : objects) {
    const double d = distance_to_rect(p, o.footprint());
    if (!best || d < best_d) {
      best = &o;
      best_d = d;
    }
  }
  return best;
}

std::string turn_phrase(Action a, bool entering, const std::string& region) {
  switch (a) {
    case Action::kLeft: return entering ? "turn left into the " + region : "turn left in the " + region;
    case Action::kRight: return entering ? "turn right into the " + region : "turn right in the " + region;
    default: return entering ? "go straight into the " + region : "walk straight through the " + region;
  }
}

}  // namespace

std::string natural_name(const std::string& category) {
  std::string out = category;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string realize_instruction(const Scene& scene, const NavPath& path) {
  const auto actions = classify_actions(path);
  const auto objects = filter_objects_for_floor(scene.objects, path.agent_height);
  const auto& pts = path.points;

  std::vector<std::string> clauses;
  auto first = assign_regions(pts.front(), scene.regions);
  std::string current = first.empty() ? "" : first.front();
  if (!current.empty()) clauses.push_back("leave the " + current);
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    // A point on a shared wall belongs to both rooms; the room ahead is the
    // one containing the next point.
    auto here = assign_regions(pts[k], scene.regions);
    auto ahead = assign_regions(pts[k + 1], scene.regions);
    std::string room;
    for (const auto& r : here)
      if (std::find(ahead.begin(), ahead.end(), r) != ahead.end()) room = r;
    if (room.empty() && !here.empty()) room = here.front();
    const bool entering = !room.empty() && room != current;
    if (room.empty())
      clauses.push_back(actions[k] == Action::kLeft    ? "turn left"
                        : actions[k] == Action::kRight ? "turn right"
                                                       : "walk straight");
    else
      clauses.push_back(turn_phrase(actions[k], entering, room));
    if (!room.empty()) current = room;
  }
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) out += (i ? ", " : "") + clauses[i];
  const SceneObject* goal = nearest_object(objects, pts.back());
  std::string stop = goal ? "stop near the " + natural_name(goal->category) : "stop";
  out += out.empty() ? stop : " and " + stop;
  out += ".";
  return out;
}

SyntheticScene generate_synthetic_scene(std::uint64_t seed, const SynthSpec& spec) {
  if (spec.min_rooms < 1 || spec.max_rooms < spec.min_rooms)
    throw InvalidArgument("synthetic spec: room count range must be non-empty and at least 1");
  if (spec.max_rooms > int(room_types().size()))
    throw InvalidArgument("synthetic spec: at most " + std::to_string(room_types().size()) + " rooms supported");
  if (spec.min_objects_per_room < 1 || spec.max_objects_per_room < spec.min_objects_per_room)
    throw InvalidArgument("synthetic spec: objects-per-room range must be non-empty and at least 1");
  if (!(spec.room_size >= 3.0)) throw InvalidArgument("synthetic spec: room_size must be at least 3 m");
  if (spec.paths_per_scene < 1) throw InvalidArgument("synthetic spec: paths_per_scene must be at least 1");

  Rng rng(seed);
  const int n_rooms = uniform_int(rng, spec.min_rooms, spec.max_rooms);
  const auto cells = grid_walk(rng, n_rooms);
  std::vector<int> type_index(room_types().size());
  for (std::size_t i = 0; i < type_index.size(); ++i) type_index[i] = int(i);
  std::shuffle(type_index.begin(), type_index.end(), rng);

  const double S = spec.room_size;
  SyntheticScene out;
  Scene& scene = out.scene;
  scene.id = "synth_" + std::to_string(seed);
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  for (auto c : cells) {
    min_x = std::min(min_x, c.x);
    min_y = std::min(min_y, c.y);
    max_x = std::max(max_x, c.x);
    max_y = std::max(max_y, c.y);
  }
  const double margin = 0.5;
  scene.bounds = {{min_x * S - margin, min_y * S - margin}, {(max_x + 1) * S + margin, (max_y + 1) * S + margin}};

  std::vector<Polygon> floor;
  int object_counter = 0;
  for (int i = 0; i < n_rooms; ++i) {
    const auto& type = room_types()[type_index[i]];
    const Vec2 center{(cells[i].x + 0.5) * S, (cells[i].y + 0.5) * S};
    scene.regions.push_back({"r" + std::to_string(i), type.name, center, {S, S}});
    floor.push_back({{center.x - S / 2, center.y - S / 2},
                     {center.x + S / 2, center.y - S / 2},
                     {center.x + S / 2, center.y + S / 2},
                     {center.x - S / 2, center.y + S / 2}});
    const int n_obj = uniform_int(rng, spec.min_objects_per_room, spec.max_objects_per_room);
    for (int j = 0; j < n_obj; ++j) {
      const auto& cats = type.categories;
      const std::string cat = cats[uniform_int(rng, 0, int(cats.size()) - 1)];
      const double wx = uniform(rng, 0.4, 1.4), wy = uniform(rng, 0.4, 1.4), wh = uniform(rng, 0.3, 1.8);
      const double x = uniform(rng, center.x - S / 2 + wx / 2 + 0.2, center.x + S / 2 - wx / 2 - 0.2);
      const double y = uniform(rng, center.y - S / 2 + wy / 2 + 0.2, center.y + S / 2 - wy / 2 - 0.2);
      scene.objects.push_back({"o" + std::to_string(object_counter++), cat, {x, y, wh / 2}, {wx, wy, wh}});
    }
    if (spec.distractors) {
      // Upper floor furniture: both floor-filter disjuncts fail.
      scene.objects.push_back({"o" + std::to_string(object_counter++), type.categories.front(),
                               {center.x + uniform(rng, -1, 1), center.y + uniform(rng, -1, 1), spec.agent_height + 3.2},
                               {1.0, 1.0, 0.6}});
      scene.objects.push_back({"o" + std::to_string(object_counter++), i % 2 ? "wall" : "floor",
                               {center.x, center.y, 0.05},
                               {S, 0.2, 0.1}});
    }
  }
  scene.navigable_polygons = floor;

  const auto floor_objects = filter_objects_for_floor(scene.objects, spec.agent_height);
  for (int p = 0; p < spec.paths_per_scene; ++p) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw Error("synthetic generator failed to place a path");
      NavPath path;
      path.agent_height = spec.agent_height;
      const bool reverse = n_rooms > 1 && p % 2 == 1;
      std::vector<int> order(n_rooms);
      for (int i = 0; i < n_rooms; ++i) order[i] = reverse ? n_rooms - 1 - i : i;
      const auto& first = scene.regions[order[0]];
      path.points.push_back({first.center.x + uniform(rng, -S / 3, S / 3), first.center.y + uniform(rng, -S / 3, S / 3)});
      for (int i = 1; i < n_rooms; ++i) {
        const auto& a = scene.regions[order[i - 1]];
        const auto& b = scene.regions[order[i]];
        const Vec2 mid{(a.center.x + b.center.x) / 2, (a.center.y + b.center.y) / 2};
        const double t = uniform(rng, -S / 4, S / 4);
        const bool vertical_wall = std::abs(a.center.y - b.center.y) < 1e-9;
        path.points.push_back(vertical_wall ? Vec2{mid.x, mid.y + t} : Vec2{mid.x + t, mid.y});
        if (i + 1 < n_rooms)
          path.points.push_back({b.center.x + uniform(rng, -S / 4, S / 4), b.center.y + uniform(rng, -S / 4, S / 4)});
      }
      // Final point: beside a landmark in the last room.
      const auto& last = scene.regions[order.back()];
      std::vector<const SceneObject*> landmarks;
      for (const auto& o : floor_objects)
        if (last.area().contains({o.center.x, o.center.y})) landmarks.push_back(&o);
      Vec2 goal = last.center;
      if (!landmarks.empty()) {
        const auto* lm = landmarks[uniform_int(rng, 0, int(landmarks.size()) - 1)];
        const double ang = uniform(rng, 0, 2 * std::numbers::pi);
        const double reach = std::max(lm->extents.x, lm->extents.y) / 2 + 0.4;
        goal = {lm->center.x + reach * std::cos(ang), lm->center.y + reach * std::sin(ang)};
        const Rect inner{{last.center.x - S / 2 + 0.3, last.center.y - S / 2 + 0.3},
                         {last.center.x + S / 2 - 0.3, last.center.y + S / 2 - 0.3}};
        goal.x = std::clamp(goal.x, inner.min.x, inner.max.x);
        goal.y = std::clamp(goal.y, inner.min.y, inner.max.y);
      }
      path.points.push_back(goal);
      bool ok = true;
      for (std::size_t k = 1; k < path.points.size(); ++k) ok = ok && distance(path.points[k], path.points[k - 1]) >= 1.0;
      if (!ok) continue;
      out.references.push_back(realize_instruction(scene, path));
      out.paths.push_back(std::move(path));
      break;
    }
  }
  validate(scene);
  return out;
}

RgbImage render_panorama(const Scene& scene, Vec2 point, double agent_height, int height, int width) {
  constexpr int kSectors = 8;
  constexpr double kSightRange = 3.0;
  const Rgb wall{180, 180, 180}, floor_color{120, 90, 60}, open{210, 210, 200};
  const auto objects = filter_objects_for_floor(scene.objects, agent_height);
  RgbImage img(height, width, open);
  for (int s = 0; s < kSectors; ++s) {
    const double lo = s * 2 * std::numbers::pi / kSectors - std::numbers::pi;
    const double hi = lo + 2 * std::numbers::pi / kSectors;
    const SceneObject* best = nullptr;
    double best_d = kSightRange;
    for (const auto& o : objects) {
      const double dx = o.center.x - point.x, dy = o.center.y - point.y;
      const double ang = std::atan2(dy, dx);
      const double d = std::hypot(dx, dy);
      if (ang >= lo && ang < hi && d < best_d) {
        best = &o;
        best_d = d;
      }
    }
    Rgb tint = open;
    if (best) {
      const Rgb c = Palette::color_or_throw(best->category);
      const double shade = 1.0 - 0.5 * best_d / kSightRange;
      tint = {std::uint8_t(c.r * shade), std::uint8_t(c.g * shade), std::uint8_t(c.b * shade)};
    }
    const int c0 = s * width / kSectors, c1 = (s + 1) * width / kSectors;
    for (int r = 0; r < height; ++r)
      for (int c = c0; c < c1; ++c) {
        const Rgb px = r < height / 4 ? wall : r >= 3 * height / 4 ? floor_color : tint;
        img.set(r, c, px);
      }
  }
  return img;
}

Scene demo_scene() {
  Scene s;
  s.id = "demo";
  s.bounds = {{0.0, 0.0}, {15.0, 5.0}};
  s.regions = {{"r0", "living room", {2.5, 2.5}, {5.0, 5.0}},
               {"r1", "hallway", {7.5, 2.5}, {5.0, 5.0}},
               {"r2", "kitchen", {12.5, 2.5}, {5.0, 5.0}}};
  s.objects = {{"o0", "sofa", {1.5, 1.2, 0.4}, {2.0, 0.9, 0.8}},
               {"o1", "cushion", {1.4, 1.3, 0.7}, {0.5, 0.4, 0.2}},
               {"o2", "table", {2.8, 3.2, 0.4}, {1.2, 0.8, 0.8}},
               {"o3", "tv_monitor", {4.3, 4.4, 1.2}, {1.0, 0.2, 0.6}},
               {"o4", "picture", {7.5, 4.8, 1.6}, {0.8, 0.1, 0.6}},
               {"o5", "plant", {9.2, 0.7, 0.5}, {0.5, 0.5, 1.0}},
               {"o6", "counter", {12.5, 4.3, 0.45}, {3.0, 0.7, 0.9}},
               {"o7", "sink", {12.0, 4.3, 0.85}, {0.6, 0.5, 0.3}},
               {"o8", "stool", {13.6, 3.2, 0.35}, {0.4, 0.4, 0.7}},
               {"o9", "ceiling", {7.5, 2.5, 2.9}, {15.0, 5.0, 0.1}},
               {"o10", "bed", {7.0, 2.0, 4.6}, {2.0, 1.6, 0.6}}};
  s.navigable_polygons = std::vector<Polygon>{{{0.2, 0.2}, {14.8, 0.2}, {14.8, 4.8}, {0.2, 4.8}}};
  return s;
}

NavPath demo_path() { return {{{1.2, 2.2}, {5.0, 2.5}, {7.5, 2.2}, {10.0, 2.5}, {12.0, 3.4}}, 1.25}; }

}  // namespace vlgen
