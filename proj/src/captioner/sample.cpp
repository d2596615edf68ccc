#include "vlgen/captioner/sample.hpp"

#include "vlgen/error.hpp"
#include "vlgen/log.hpp"

namespace vlgen::captioner {

MapPatches patchify_map(const RgbImage& image, int image_size, int patch_size) {
  if (image.height() != image_size || image.width() != image_size)
    throw InvalidArgument("map is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                          ", the encoder expects " + std::to_string(image_size) + "x" + std::to_string(image_size));
  const int side = image_size / patch_size;
  const int width = patch_size * patch_size * 3;
  MapPatches out;
  out.patch_count = side * side;
  std::vector<std::vector<double>> kept;
  const auto& bytes = image.bytes();
  for (int pr = 0; pr < side; ++pr)
    for (int pc = 0; pc < side; ++pc) {
      std::vector<double> row(static_cast<std::size_t>(width));
      bool any = false;
      std::size_t k = 0;
      for (int y = 0; y < patch_size; ++y) {
        const std::size_t base = (std::size_t(pr * patch_size + y) * std::size_t(image_size) + std::size_t(pc * patch_size)) * 3;
        for (int x = 0; x < patch_size * 3; ++x, ++k) {
          const std::uint8_t b = bytes[base + std::size_t(x)];
          row[k] = b / 255.0;
          any = any || b != 0;
        }
      }
      if (!any) continue;
      out.rows.push_back(pr * side + pc);
      kept.push_back(std::move(row));
    }
  out.patches.resize(Eigen::Index(kept.size()), width);
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (int j = 0; j < width; ++j) out.patches(Eigen::Index(i), j) = kept[i][std::size_t(j)];
  return out;
}

Matrix panorama_row(const RgbImage& image, int height, int width) {
  if (image.height() != height || image.width() != width)
    throw InvalidArgument("panorama is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
                          ", expected " + std::to_string(height) + "x" + std::to_string(width));
  Matrix row(1, Eigen::Index(image.bytes().size()));
  for (std::size_t i = 0; i < image.bytes().size(); ++i) row(0, Eigen::Index(i)) = image.bytes()[i] / 255.0;
  return row;
}

Vocabulary build_vocabulary(const std::vector<Episode>& train_episodes) {
  std::vector<std::string> texts;
  for (const auto& e : train_episodes) {
    texts.push_back(e.prompt);
    for (const auto& r : e.references) texts.push_back(r);
    for (const auto& pr : e.point_regions)
      for (const auto& name : pr) texts.push_back(name);
  }
  return Vocabulary::build(texts);
}

Sample prepare_sample(const Episode& episode, const std::filesystem::path& base_dir, const Vocabulary& vocab,
                      const CaptionerConfig& config, std::size_t reference_index, bool load_panoramas) {
  Sample s;
  s.episode_id = episode.id;
  s.split = episode.split;
  s.references = episode.references;
  s.map = patchify_map(read_png(base_dir / episode.map_image_path), config.image_size, config.patch_size);
  if (episode.point_regions.size() != episode.actions.size())
    throw InvalidArgument("episode " + episode.id + ": point_regions and actions differ in length");
  for (const auto& regions : episode.point_regions) {
    auto& point = s.point_regions.emplace_back();
    for (const auto& name : regions) point.push_back(vocab.encode(name));
  }
  for (Action a : episode.actions) s.actions.push_back(int(a));
  if (load_panoramas) {
    if (!episode.panorama_paths || episode.panorama_paths->empty())
      throw InvalidArgument("episode " + episode.id + " has no panoramas but the variant uses them");
    s.panoramas.resize(Eigen::Index(episode.panorama_paths->size()), config.pano_height * config.pano_width * 3);
    for (std::size_t k = 0; k < episode.panorama_paths->size(); ++k)
      s.panoramas.row(Eigen::Index(k)) =
          panorama_row(read_png(base_dir / (*episode.panorama_paths)[k]), config.pano_height, config.pano_width);
  }
  s.prompt = vocab.encode(episode.prompt);
  if (int(s.prompt.size()) > config.max_prompt_len) {
    warn("episode " + episode.id + ": prompt truncated to " + std::to_string(config.max_prompt_len) + " tokens");
    s.prompt.resize(std::size_t(config.max_prompt_len));
  }
  if (reference_index < episode.references.size()) {
    s.target = vocab.encode(episode.references[reference_index]);
    if (int(s.target.size()) + 1 > config.max_instruction_len) {
      warn("episode " + episode.id + ": reference truncated to " + std::to_string(config.max_instruction_len - 1) +
           " tokens");
      s.target.resize(std::size_t(config.max_instruction_len - 1));
    }
  }
  s.target.push_back(Vocabulary::kEos);
  return s;
}

std::vector<Sample> prepare_samples(const std::vector<Episode>& episodes, const std::filesystem::path& base_dir,
                                    const Vocabulary& vocab, const CaptionerConfig& config,
                                    const SampleOptions& options) {
  std::vector<Sample> out;
  for (const auto& e : episodes) {
    const std::size_t n = options.all_references ? std::max<std::size_t>(1, e.references.size()) : 1;
    for (std::size_t r = 0; r < n; ++r) out.push_back(prepare_sample(e, base_dir, vocab, config, r, options.load_panoramas));
  }
  return out;
}

}  // namespace vlgen::captioner
