#pragma once

#include <span>
#include <string>
#include <vector>

#include "vlgen/scene.hpp"

namespace vlgen {

// Vertical tolerance for objects on the agent's floor, meters.
inline constexpr double kFloorHeightTolerance = 1.6;

// Heading changes with magnitude up to this many degrees count as straight.
inline constexpr double kStraightBandDegrees = 20.0;

// True when the object belongs to the agent's floor: the agent height lies
// within the object's vertical extent, or the object's center is within
// kFloorHeightTolerance of it.
bool on_agent_floor(const SceneObject& object, double agent_height);

// Drops excluded categories, then keeps objects on the agent's floor.
// Input order is preserved.
std::vector<SceneObject> filter_objects_for_floor(std::span<const SceneObject> objects, double agent_height);

// Names of every region whose rectangle contains the point (bounds inclusive).
std::vector<std::string> assign_regions(Vec2 point, std::span<const Region> regions);

// Signed heading change in degrees at an interior point, normalized to
// (-180, 180]. Counterclockwise (y up) is positive.
double heading_change_degrees(Vec2 prev, Vec2 cur, Vec2 next);

// One action per path point: STRAIGHT for the first, STOP for the last,
// and LEFT/RIGHT/STRAIGHT from the heading change in between.
// Throws InvalidArgument for K < 2 or repeated consecutive points.
std::vector<Action> classify_actions(const NavPath& path);

}  // namespace vlgen
