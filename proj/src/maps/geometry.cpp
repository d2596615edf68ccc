#include "vlgen/geometry.hpp"

#include <cmath>
#include <numbers>

#include "vlgen/error.hpp"
#include "vlgen/palette.hpp"

namespace vlgen {

bool on_agent_floor(const SceneObject& o, double agent_height) {
  const double h = o.center.z;
  const double half = o.extents.z / 2.0;
  const bool spans_agent = h - half <= agent_height && agent_height <= h + half;
  const bool near_agent = std::abs(h - agent_height) <= kFloorHeightTolerance;
  return spans_agent || near_agent;
}

std::vector<SceneObject> filter_objects_for_floor(std::span<const SceneObject> objects, double agent_height) {
  std::vector<SceneObject> out;
  for (const auto& o : objects) {
    if (is_excluded_category(o.category)) continue;
    if (on_agent_floor(o, agent_height)) out.push_back(o);
  }
  return out;
}

std::vector<std::string> assign_regions(Vec2 p, std::span<const Region> regions) {
  std::vector<std::string> out;
  for (const auto& r : regions) {
    const double hx = r.extents.x / 2.0;
    const double hy = r.extents.y / 2.0;
    if (r.center.x - hx <= p.x && p.x <= r.center.x + hx && r.center.y - hy <= p.y && p.y <= r.center.y + hy)
      out.push_back(r.name);
  }
  return out;
}

double heading_change_degrees(Vec2 prev, Vec2 cur, Vec2 next) {
  const double ax = cur.x - prev.x, ay = cur.y - prev.y;
  const double bx = next.x - cur.x, by = next.y - cur.y;
  if ((ax == 0 && ay == 0) || (bx == 0 && by == 0))
    throw InvalidArgument("heading undefined: repeated consecutive path points");
  // atan2 of cross and dot gives the signed angle in [-180, 180].
  double deg = std::atan2(ax * by - ay * bx, ax * bx + ay * by) * 180.0 / std::numbers::pi;
  if (deg <= -180.0) deg += 360.0;
  return deg;
}

std::vector<Action> classify_actions(const NavPath& path) {
  const auto& pts = path.points;
  if (pts.size() < 2) throw InvalidArgument("classify_actions: path needs at least 2 points");
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k] == pts[k - 1])
      throw InvalidArgument("classify_actions: repeated consecutive point at index " + std::to_string(k));

  std::vector<Action> actions(pts.size(), Action::kStraight);
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
    const double delta = heading_change_degrees(pts[k - 1], pts[k], pts[k + 1]);
    // Rounding guard so rotated copies of an exact 20 degree turn stay straight.
    const double mag = std::abs(delta);
    if (mag <= kStraightBandDegrees + 1e-9)
      actions[k] = Action::kStraight;
    else
      actions[k] = delta > 0 ? Action::kLeft : Action::kRight;
  }
  actions.back() = Action::kStop;
  return actions;
}

}  // namespace vlgen
