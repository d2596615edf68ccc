#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vlgen/scene.hpp"

namespace vlgen {

// The decoder prefix template. "[objects]" and "[regions]" are slots;
// everything from "[instruction]" on is left for the model.
struct PromptTemplate {
  std::string text = "Starting from the dark yellow point [objects] [regions], [instruction]";
  std::string object_prefix = "near ";
  std::string region_pattern = "in the {name} region";

  // Keys: prompt.template, prompt.object_prefix, prompt.region_pattern.
  static PromptTemplate load(const std::filesystem::path& file);

  // Template text before the first slot, e.g. "Starting from the dark yellow point".
  std::string head() const;

  std::string render(const std::vector<std::string>& objects, const std::string& region) const;
};

struct PromptOptions {
  double near_threshold = 1.5;  // meters from the start point to an object's footprint
  std::size_t max_objects = 2;
};

// Categories of floor-filtered objects near `point`, nearest first, each
// category once, at most options.max_objects.
std::vector<std::string> nearby_object_categories(const Scene& scene, Vec2 point, double agent_height,
                                                  const PromptOptions& options = {});

std::string build_prompt(const Episode& episode, const Scene& scene, const PromptOptions& options = {},
                         const PromptTemplate& tmpl = {});

}  // namespace vlgen
