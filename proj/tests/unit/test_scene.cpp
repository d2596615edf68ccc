#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "vlgen/error.hpp"
#include "vlgen/geometry.hpp"
#include "vlgen/log.hpp"
#include "vlgen/scene.hpp"
#include "vlgen/synthetic.hpp"

namespace vlgen {
namespace {

namespace fs = std::filesystem;

const char* kMinimalScene = R"({
  "id": "mini",
  "bounds": {"min": [0, 0], "max": [4, 4]},
  "objects": [{"id": "o0", "category": "chair", "center": [1, 1, 0.5], "extents": [0.5, 0.5, 1.0]}],
  "regions": [{"id": "r0", "name": "office", "center": [2, 2], "extents": [4, 4]}]
})";

TEST(LoadScene, MinimalSceneHasOneObject) {
  auto s = scene_from_json(nlohmann::json::parse(kMinimalScene));
  EXPECT_EQ(s.id, "mini");
  ASSERT_EQ(s.objects.size(), 1u);
  EXPECT_EQ(s.objects[0].category, "chair");
  EXPECT_EQ(s.regions.size(), 1u);
  EXPECT_FALSE(s.navigable_polygons.has_value());
}

TEST(LoadScene, UnknownCategoryListsValidOnes) {
  auto doc = nlohmann::json::parse(kMinimalScene);
  doc["objects"][0]["category"] = "flying_carpet";
  try {
    scene_from_json(doc);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& ex) {
    std::string msg = ex.what();
    EXPECT_NE(msg.find("objects[0].category"), std::string::npos) << msg;
    EXPECT_NE(msg.find("flying_carpet"), std::string::npos);
    EXPECT_NE(msg.find("chair"), std::string::npos);
    EXPECT_NE(msg.find("misc"), std::string::npos);
  }
}

TEST(LoadScene, SchemaViolationNamesField) {
  auto doc = nlohmann::json::parse(kMinimalScene);
  doc["objects"][0]["extents"] = {1.0, 2.0};
  EXPECT_THROW_MSG(scene_from_json(doc), SchemaError, "objects[0].extents");
  doc = nlohmann::json::parse(kMinimalScene);
  doc["objects"][0]["extents"][2] = 0.0;
  EXPECT_THROW_MSG(scene_from_json(doc), SchemaError, "strictly positive");
  doc = nlohmann::json::parse(kMinimalScene);
  doc["regions"][0].erase("name");
  EXPECT_THROW_MSG(scene_from_json(doc), SchemaError, "regions[0].name");
  doc = nlohmann::json::parse(kMinimalScene);
  doc["objects"][0]["center"][0] = 9.0;
  EXPECT_THROW_MSG(scene_from_json(doc), SchemaError, "outside scene bounds");
}

TEST(LoadScene, UnknownFieldsWarn) {
  std::vector<std::string> warnings;
  auto old = set_warning_handler([&](const std::string& m) { warnings.push_back(m); });
  auto doc = nlohmann::json::parse(kMinimalScene);
  doc["lighting"] = "dim";
  doc["objects"][0]["color"] = "red";
  auto s = scene_from_json(doc);
  set_warning_handler(old);
  EXPECT_EQ(s.objects.size(), 1u);
  ASSERT_EQ(warnings.size(), 2u);
  EXPECT_NE(warnings[0].find("lighting"), std::string::npos);
  EXPECT_NE(warnings[1].find("objects[0].color"), std::string::npos);
}

TEST(LoadScene, BundledDemoSceneIsCanonical) {
  const fs::path file = fs::path(VLGEN_SOURCE_DIR) / "data" / "demo_scene.json";
  std::ifstream in(file, std::ios::binary);
  ASSERT_TRUE(in) << file;
  std::stringstream bytes;
  bytes << in.rdbuf();
  EXPECT_EQ(serialize_scene(load_scene(file)), bytes.str());
  EXPECT_EQ(load_scene(file), demo_scene());
}

TEST(SceneRoundTrip, SyntheticScenesSurviveSaveLoad) {
  TempDir dir;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    SynthSpec spec;
    spec.min_rooms = 1;
    spec.max_rooms = 5;
    auto synth = generate_synthetic_scene(seed, spec);
    save_scene(synth.scene, dir.path() / "s.json");
    EXPECT_EQ(load_scene(dir.path() / "s.json"), synth.scene) << "seed " << seed;
  }
}

TEST(EpisodeRoundTrip, JsonlPreservesEpisodes) {
  TempDir dir;
  Episode e;
  e.id = "ep";
  e.scene_id = "demo";
  e.path = demo_path();
  e.map_image_path = "maps/ep.png";
  e.actions = classify_actions(e.path);
  for (auto p : e.path.points) e.point_regions.push_back(assign_regions(p, demo_scene().regions));
  e.prompt = "Starting from the dark yellow point, ";
  e.references = {"leave the living room and stop near the sink."};
  e.split = Split::kValUnseen;
  Episode f = e;
  f.id = "ep2";
  f.panorama_paths = std::vector<std::string>(e.path.size(), "p.png");
  save_episodes({e, f}, dir.path() / "e.jsonl");
  auto loaded = load_episodes(dir.path() / "e.jsonl");
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[0], e);
  EXPECT_EQ(loaded[1], f);
}

TEST(EpisodeValidation, ActionsMustEndInStopAndMatchK) {
  Episode e;
  e.id = "x";
  e.path = {{{0, 0}, {1, 0}, {2, 0}}, 1.0};
  e.point_regions.assign(3, {});
  e.references = {"go."};
  e.actions = {Action::kStraight, Action::kStraight, Action::kStraight};
  EXPECT_THROW_MSG(validate(e), SchemaError, "STOP");
  e.actions = {Action::kStraight, Action::kStop};
  EXPECT_THROW_MSG(validate(e), SchemaError, "actions");
  e.actions = {Action::kStraight, Action::kStraight, Action::kStop};
  EXPECT_NO_THROW(validate(e));
  e.path.points[1] = e.path.points[0];
  EXPECT_THROW(validate(e), SchemaError);
}

TEST(Synthetic, DeterministicForSeed) {
  SynthSpec spec;
  auto a = generate_synthetic_scene(0, spec);
  auto b = generate_synthetic_scene(0, spec);
  EXPECT_EQ(a.scene, b.scene);
  EXPECT_EQ(a.paths, b.paths);
  EXPECT_EQ(a.references, b.references);
  auto c = generate_synthetic_scene(1, spec);
  EXPECT_FALSE(a.scene == c.scene);
}

TEST(Synthetic, RoomCountMatchesSpec) {
  SynthSpec spec;
  spec.min_rooms = spec.max_rooms = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_EQ(generate_synthetic_scene(seed, spec).scene.regions.size(), 3u);
}

TEST(Synthetic, InfeasibleSpecRejected) {
  SynthSpec spec;
  spec.min_rooms = spec.max_rooms = 0;
  EXPECT_THROW(generate_synthetic_scene(0, spec), InvalidArgument);
  spec.min_rooms = 2;
  spec.max_rooms = 1;
  EXPECT_THROW(generate_synthetic_scene(0, spec), InvalidArgument);
}

TEST(Synthetic, EpisodesEndInStopAndPathsAreValid) {
  SynthSpec spec;
  spec.paths_per_scene = 3;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto synth = generate_synthetic_scene(seed, spec);
    ASSERT_EQ(synth.paths.size(), 3u);
    for (const auto& p : synth.paths) {
      EXPECT_NO_THROW(validate(p));
      auto actions = classify_actions(p);
      EXPECT_EQ(actions.size(), p.size());
      EXPECT_EQ(actions.back(), Action::kStop);
    }
  }
}

// Each interior clause of a reference carries the turn word of its point.
TEST(Synthetic, InstructionTurnWordsFollowActions) {
  SynthSpec spec;
  spec.min_rooms = 2;
  spec.max_rooms = 5;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto synth = generate_synthetic_scene(seed, spec);
    const auto& path = synth.paths[0];
    auto actions = classify_actions(path);
    std::string text = synth.references[0];
    text.pop_back();  // '.'
    std::vector<std::string> clauses;
    std::size_t pos = 0;
    while (true) {
      auto next = text.find(", ", pos);
      clauses.push_back(text.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    // The last clause holds the last interior point and the stop phrase.
    auto& last = clauses.back();
    auto and_pos = last.rfind(" and stop");
    ASSERT_NE(and_pos, std::string::npos) << synth.references[0];
    last = last.substr(0, and_pos);
    ASSERT_EQ(clauses.size(), path.size() - 1) << synth.references[0];
    for (std::size_t k = 1; k + 1 < path.size(); ++k) {
      const auto& clause = clauses[k];
      const char* word = actions[k] == Action::kLeft ? "left" : actions[k] == Action::kRight ? "right" : "straight";
      EXPECT_NE(clause.find(word), std::string::npos) << clause << " vs " << to_string(actions[k]);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Synthetic, LShapedDemoMentionsCorrectTurn) {
  // Walk east, then north: a counterclockwise (left) turn.
  Scene s = demo_scene();
  NavPath path{{{1.0, 1.0}, {3.5, 1.0}, {3.5, 4.0}}, 1.25};
  auto text = realize_instruction(s, path);
  EXPECT_EQ(classify_actions(path)[1], Action::kLeft);
  EXPECT_NE(text.find("turn left"), std::string::npos) << text;
}

}  // namespace
}  // namespace vlgen
