#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vlgen/palette.hpp"

namespace vlgen {

struct PixelCoord {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

// Row-major 8-bit RGB raster, no alpha.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, Rgb fill = {});

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return height_ == 0 || width_ == 0; }
  bool in_bounds(int row, int col) const { return row >= 0 && col >= 0 && row < height_ && col < width_; }

  Rgb at(int row, int col) const {
    const auto* p = &data_[index(row, col)];
    return {p[0], p[1], p[2]};
  }
  void set(int row, int col, Rgb c) {
    auto* p = &data_[index(row, col)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int row, int col) const { return (std::size_t(row) * width_ + col) * 3; }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

void write_png(const RgbImage& image, const std::filesystem::path& file);
RgbImage read_png(const std::filesystem::path& file);

}  // namespace vlgen
