#pragma once

#include <span>
#include <vector>

#include "vlgen/image.hpp"

// Data-parallel raster kernels. Each kernel has a serial reference in
// `serial` (straightforward, used by tests as the oracle) and an OpenMP
// implementation in `omp` used by the pipeline. Both produce identical output.
namespace vlgen::kernels {

namespace serial {

// Squared Euclidean distance, in pixels, from every pixel center to the
// nearest seed. Brute force over seeds. Pixels with no seed get +inf.
std::vector<double> squared_distance_field(int height, int width, std::span<const PixelCoord> seeds);

// Sets pixels with squared distance > radius^2 to black.
void mask_far_pixels(RgbImage& image, std::span<const double> squared_distance, double radius);

// Nearest-neighbour resize with half-pixel centers.
RgbImage resize_nearest(const RgbImage& src, int out_height, int out_width);

}  // namespace serial

namespace omp {

// Exact squared Euclidean distance transform (separable lower-envelope
// algorithm), columns then rows, each pass parallel over lines.
std::vector<double> squared_distance_field(int height, int width, std::span<const PixelCoord> seeds);

void mask_far_pixels(RgbImage& image, std::span<const double> squared_distance, double radius);

RgbImage resize_nearest(const RgbImage& src, int out_height, int out_width);

}  // namespace omp

// Source index for nearest-neighbour sampling of destination index `dst`.
inline int nearest_source_index(int dst, int in_size, int out_size) {
  const long long idx = (2LL * dst + 1) * in_size / (2LL * out_size);
  return static_cast<int>(idx < in_size ? idx : in_size - 1);
}

}  // namespace vlgen::kernels
