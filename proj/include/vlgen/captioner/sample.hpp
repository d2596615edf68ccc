#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vlgen/captioner/config.hpp"
#include "vlgen/captioner/vocabulary.hpp"
#include "vlgen/image.hpp"
#include "vlgen/nn/parameter.hpp"
#include "vlgen/scene.hpp"

namespace vlgen::captioner {

using nn::Matrix;

// Map split into patches; only non-black patches are stored.
struct MapPatches {
  Matrix patches;         // one row per stored patch, values in [0, 1]
  std::vector<int> rows;  // patch index (row-major over the patch grid)
  int patch_count = 0;
};

// Throws InvalidArgument unless the image is image_size x image_size.
MapPatches patchify_map(const RgbImage& image, int image_size, int patch_size);

// Panorama as one flattened row of values in [0, 1].
Matrix panorama_row(const RgbImage& image, int height, int width);

// One (episode, reference) training or evaluation example.
struct Sample {
  std::string episode_id;
  Split split = Split::kTrain;
  MapPatches map;
  std::vector<std::vector<std::vector<int>>> point_regions;  // point -> region -> token ids
  std::vector<int> actions;                                  // Action values
  Matrix panoramas;                                          // K x pixels, may be empty
  std::vector<int> prompt;                                   // may be empty
  std::vector<int> target;                                   // ends with EOS
  std::vector<std::string> references;
};

// Vocabulary over the references, prompts and region names of the given
// (training) episodes.
Vocabulary build_vocabulary(const std::vector<Episode>& train_episodes);

struct SampleOptions {
  bool load_panoramas = false;
  // One sample per reference; otherwise only the first reference is used.
  bool all_references = true;
};

// Loads maps (and panoramas) relative to base_dir. Over-long prompts and
// targets are truncated with a warning.
std::vector<Sample> prepare_samples(const std::vector<Episode>& episodes, const std::filesystem::path& base_dir,
                                    const Vocabulary& vocab, const CaptionerConfig& config,
                                    const SampleOptions& options = {});

Sample prepare_sample(const Episode& episode, const std::filesystem::path& base_dir, const Vocabulary& vocab,
                      const CaptionerConfig& config, std::size_t reference_index, bool load_panoramas);

}  // namespace vlgen::captioner
