#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vlgen/image.hpp"
#include "vlgen/scene.hpp"

namespace vlgen {

struct SynthSpec {
  int min_rooms = 3;
  int max_rooms = 3;
  int min_objects_per_room = 2;
  int max_objects_per_room = 4;
  double room_size = 5.0;  // meters, grid cell side
  int paths_per_scene = 1;
  double agent_height = 1.25;
  // Adds objects on an upper floor and excluded-category objects so the
  // floor filter has something to remove.
  bool distractors = true;
};

struct SyntheticScene {
  Scene scene;
  std::vector<NavPath> paths;
  std::vector<std::string> references;  // one per path
};

// Deterministic in (seed, spec). Rooms are tiles of a self-avoiding grid
// walk; each path crosses the rooms in walk order and ends next to a
// landmark object. References are realized from a template grammar over
// the path's actions, regions and landmark.
SyntheticScene generate_synthetic_scene(std::uint64_t seed, const SynthSpec& spec);

// Template realization used by the generator; exposed for tests.
std::string realize_instruction(const Scene& scene, const NavPath& path);

// Human-readable form of a category, e.g. "chest_of_drawers" -> "chest of drawers".
std::string natural_name(const std::string& category);

// Small egocentric stand-in for a simulator panorama: eight heading sectors,
// each tinted by the nearest visible object's category color.
RgbImage render_panorama(const Scene& scene, Vec2 point, double agent_height, int height = 16, int width = 32);

// Demo scene used by the docs and tests: living room, hallway, kitchen.
Scene demo_scene();
NavPath demo_path();

}  // namespace vlgen
