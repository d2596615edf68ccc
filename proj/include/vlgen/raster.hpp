#pragma once

#include <vector>

#include "vlgen/image.hpp"
#include "vlgen/scene.hpp"

namespace vlgen {

// Drawing constants for the path overlay, in pixels.
inline constexpr double kPathLineWidth = 3.0;
inline constexpr double kPathPointRadius = 4.0;

struct MapOptions {
  double resolution = 0.05;  // meters per pixel
  double mask_radius = 40.0;  // pixels
  int pad_size = 1024;
  int output_size = 384;
};

// Top-down palette raster. Pixel (0, 0) is the top-left corner; rows grow
// towards -y so the image reads like a plan view with y pointing up.
struct SemanticMap {
  RgbImage pixels;
  double resolution = 0.05;
  Vec2 origin;  // world coordinate of the top-left corner of pixel (0, 0)

  // World position of a pixel center.
  Vec2 pixel_center(int row, int col) const {
    return {origin.x + (col + 0.5) * resolution, origin.y - (row + 0.5) * resolution};
  }
  // Continuous pixel coordinates (col, row) of a world point, pixel centers
  // at integer values.
  Vec2 to_pixel(Vec2 world) const {
    return {(world.x - origin.x) / resolution - 0.5, (origin.y - world.y) / resolution - 0.5};
  }
};

// Renders the floor-filtered objects of `scene` and the path overlay.
// Draw order: background, navigable area, objects by descending footprint
// area, path line, intermediate points, start, end.
SemanticMap rasterize(const Scene& scene, const NavPath& path, double resolution);

// Pixels on the 1-pixel centerline of the path polyline, sorted, unique.
std::vector<PixelCoord> trace_path_pixels(const SemanticMap& map, const NavPath& path);

// Blacks out every pixel farther than `radius` pixels from all path pixels.
SemanticMap mask_map(const SemanticMap& map, std::span<const PixelCoord> path_pixels, double radius = 40.0);

// Pads with black to pad_size x pad_size (content top-left), then
// nearest-resizes to output_size x output_size.
SemanticMap pad_and_resize(const SemanticMap& map, int pad_size = 1024, int output_size = 384);

bool palette_closed(const RgbImage& image);

}  // namespace vlgen
