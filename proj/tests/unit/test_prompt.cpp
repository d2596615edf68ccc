#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"
#include "vlgen/error.hpp"
#include "vlgen/geometry.hpp"
#include "vlgen/prompt.hpp"
#include "vlgen/synthetic.hpp"

namespace vlgen {
namespace {

Episode episode_at(const Scene& scene, std::vector<Vec2> pts, double agent = 1.25) {
  Episode e;
  e.path = {std::move(pts), agent};
  for (auto p : e.path.points) e.point_regions.push_back(assign_regions(p, scene.regions));
  e.actions = classify_actions(e.path);
  e.references = {"x"};
  return e;
}

TEST(BuildPrompt, ObjectsAndRegion) {
  auto scene = demo_scene();
  auto e = episode_at(scene, demo_path().points);
  EXPECT_EQ(build_prompt(e, scene), "Starting from the dark yellow point near sofa cushion in the living room region, ");
}

TEST(BuildPrompt, RegionOnly) {
  auto scene = demo_scene();
  auto e = episode_at(scene, {{7.5, 2.5}, {9.0, 2.5}});  // middle of the hallway, nothing within 1.5 m
  EXPECT_EQ(build_prompt(e, scene), "Starting from the dark yellow point in the hallway region, ");
}

TEST(BuildPrompt, NoObjectsNoRegion) {
  Scene scene;
  scene.bounds = {{0, 0}, {10, 10}};
  auto e = episode_at(scene, {{5, 5}, {6, 5}});
  EXPECT_EQ(build_prompt(e, scene), "Starting from the dark yellow point, ");
}

TEST(BuildPrompt, ObjectsOnlyAndDistinctCategories) {
  Scene scene;
  scene.bounds = {{0, 0}, {10, 10}};
  scene.objects = {{"a", "chair", {5, 5.5, 0.5}, {0.4, 0.4, 1}},
                   {"b", "chair", {5, 4.6, 0.5}, {0.4, 0.4, 1}},
                   {"c", "table", {6, 5, 0.5}, {0.4, 0.4, 1}},
                   {"d", "bed", {5, 6.4, 0.5}, {0.4, 0.4, 1}}};
  auto e = episode_at(scene, {{5, 5}, {6, 6}});
  EXPECT_EQ(build_prompt(e, scene), "Starting from the dark yellow point near chair table, ");
}

TEST(BuildPrompt, IgnoresOtherFloorsAndExcludedCategories) {
  Scene scene;
  scene.bounds = {{0, 0}, {10, 10}};
  scene.objects = {{"a", "curtain", {5, 5.2, 1}, {0.4, 0.4, 1}}, {"b", "sofa", {5, 5.2, 5.0}, {0.4, 0.4, 0.5}}};
  auto e = episode_at(scene, {{5, 5}, {6, 6}});
  EXPECT_EQ(build_prompt(e, scene), "Starting from the dark yellow point, ");
}

TEST(BuildPrompt, UsesFirstRegionOfStartPoint) {
  auto scene = demo_scene();
  auto e = episode_at(scene, {{5.0, 2.5}, {7.0, 2.5}});  // on the living room / hallway wall
  ASSERT_EQ(e.point_regions[0].size(), 2u);
  EXPECT_NE(build_prompt(e, scene).find("in the living room region"), std::string::npos);
}

TEST(BuildPrompt, AlwaysStartsWithHeadAndEndsWithComma) {
  PromptTemplate t;
  EXPECT_EQ(t.head(), "Starting from the dark yellow point");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto synth = generate_synthetic_scene(seed, SynthSpec{});
    auto e = episode_at(synth.scene, synth.paths[0].points, synth.paths[0].agent_height);
    auto p = build_prompt(e, synth.scene);
    EXPECT_EQ(p.rfind(t.head(), 0), 0u) << p;
    EXPECT_EQ(p.substr(p.size() - 2), ", ") << p;
    EXPECT_EQ(p, build_prompt(e, synth.scene));
    // Every mentioned object is a floor-filtered category.
    auto objs = nearby_object_categories(synth.scene, e.path.points[0], e.path.agent_height);
    auto kept = filter_objects_for_floor(synth.scene.objects, e.path.agent_height);
    for (const auto& o : objs)
      EXPECT_TRUE(std::any_of(kept.begin(), kept.end(), [&](const SceneObject& k) { return k.category == o; }));
  }
}

TEST(PromptTemplate, LoadedFromConfigFile) {
  TempDir dir;
  {
    std::ofstream f(dir.path() / "prompt.cfg");
    f << "# alternative phrasing\n"
      << "prompt.template = From the yellow dot [regions] [objects], [instruction]\n"
      << "prompt.object_prefix = \"close to \"\n"
      << "prompt.region_pattern = inside the {name}\n";
  }
  auto t = PromptTemplate::load(dir.path() / "prompt.cfg");
  EXPECT_EQ(t.render({"sofa"}, "kitchen"), "From the yellow dot inside the kitchen close to sofa, ");
  EXPECT_EQ(t.render({}, ""), "From the yellow dot, ");
  EXPECT_EQ(t.head(), "From the yellow dot");
  {
    std::ofstream f(dir.path() / "bad.cfg");
    f << "prompt.region_pattern = in the region\n";
  }
  EXPECT_THROW(PromptTemplate::load(dir.path() / "bad.cfg"), SchemaError);
}

}  // namespace
}  // namespace vlgen
