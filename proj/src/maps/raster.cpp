#include "vlgen/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vlgen/error.hpp"
#include "vlgen/geometry.hpp"
#include "vlgen/kernels.hpp"
#include "vlgen/palette.hpp"

namespace vlgen {
namespace {

// Largest raster we are willing to allocate before padding would reject it.
constexpr double kMaxRasterSide = 1 << 15;

bool inside_polygon(const Polygon& poly, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Visits pixels whose center lies within `reach` of segment a-b (pixel space).
template <typename Fn>
void for_pixels_near_segment(const RgbImage& img, Vec2 a, Vec2 b, double reach, Fn&& fn) {
  const int r0 = std::max(0, int(std::floor(std::min(a.y, b.y) - reach)));
  const int r1 = std::min(img.height() - 1, int(std::ceil(std::max(a.y, b.y) + reach)));
  const int c0 = std::max(0, int(std::floor(std::min(a.x, b.x) - reach)));
  const int c1 = std::min(img.width() - 1, int(std::ceil(std::max(a.x, b.x) + reach)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (segment_distance({double(c), double(r)}, a, b) <= reach) fn(r, c);
}

void fill_disk(RgbImage& img, Vec2 center, double radius, Rgb color) {
  for_pixels_near_segment(img, center, center, radius, [&](int r, int c) { img.set(r, c, color); });
}

}  // namespace

SemanticMap rasterize(const Scene& scene, const NavPath& path, double resolution) {
  if (!(resolution > 0)) throw InvalidArgument("rasterize: resolution must be positive");
  const Rect& b = scene.bounds;
  if (!(b.width() > 0 && b.height() > 0)) throw InvalidArgument("rasterize: scene bounds are degenerate");
  const double wpx = std::ceil(b.width() / resolution - 1e-9);
  const double hpx = std::ceil(b.height() / resolution - 1e-9);
  if (wpx > kMaxRasterSide || hpx > kMaxRasterSide)
    throw InvalidArgument("rasterize: raster too large; use a coarser resolution");

  SemanticMap map;
  map.resolution = resolution;
  map.origin = {b.min.x, b.max.y};
  map.pixels = RgbImage(int(hpx), int(wpx), Palette::non_navigable());
  auto& img = map.pixels;

  const Rgb navigable = Palette::navigable();
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      const Vec2 p = map.pixel_center(r, c);
      bool nav = false;
      if (scene.navigable_polygons) {
        for (const auto& poly : *scene.navigable_polygons) nav = nav || inside_polygon(poly, p);
      } else {
        nav = b.contains(p);
      }
      if (nav) img.set(r, c, navigable);
    }

  auto objects = filter_objects_for_floor(scene.objects, path.agent_height);
  std::vector<std::size_t> order(objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return objects[i].footprint().area() > objects[j].footprint().area();
  });
  for (std::size_t i : order) {
    const auto& o = objects[i];
    const Rgb color = Palette::color_or_throw(o.category);
    const Rect fp = o.footprint();
    const Vec2 tl = map.to_pixel({fp.min.x, fp.max.y});
    const Vec2 br = map.to_pixel({fp.max.x, fp.min.y});
    const int r0 = std::max(0, int(std::ceil(tl.y))), r1 = std::min(img.height() - 1, int(std::floor(br.y)));
    const int c0 = std::max(0, int(std::ceil(tl.x))), c1 = std::min(img.width() - 1, int(std::floor(br.x)));
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) img.set(r, c, color);
  }

  const auto& pts = path.points;
  const Rgb line = Palette::line();
  for (std::size_t k = 1; k < pts.size(); ++k)
    for_pixels_near_segment(img, map.to_pixel(pts[k - 1]), map.to_pixel(pts[k]), kPathLineWidth / 2,
                            [&](int r, int c) { img.set(r, c, line); });
  for (std::size_t k = 1; k + 1 < pts.size(); ++k) fill_disk(img, map.to_pixel(pts[k]), kPathPointRadius, Palette::point());
  if (!pts.empty()) {
    fill_disk(img, map.to_pixel(pts.front()), kPathPointRadius, Palette::start());
    fill_disk(img, map.to_pixel(pts.back()), kPathPointRadius, Palette::end());
  }
  return map;
}

std::vector<PixelCoord> trace_path_pixels(const SemanticMap& map, const NavPath& path) {
  std::vector<PixelCoord> out;
  const auto& pts = path.points;
  auto add = [&](int r, int c) { out.push_back({r, c}); };
  if (pts.size() == 1) for_pixels_near_segment(map.pixels, map.to_pixel(pts[0]), map.to_pixel(pts[0]), 0.5, add);
  for (std::size_t k = 1; k < pts.size(); ++k)
    for_pixels_near_segment(map.pixels, map.to_pixel(pts[k - 1]), map.to_pixel(pts[k]), 0.5, add);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SemanticMap mask_map(const SemanticMap& map, std::span<const PixelCoord> path_pixels, double radius) {
  if (!(radius > 0)) throw InvalidArgument("mask_map: radius must be positive");
  if (path_pixels.empty()) throw InvalidArgument("mask_map: path has no pixels on the map");
  SemanticMap out = map;
  const auto sq = kernels::omp::squared_distance_field(map.pixels.height(), map.pixels.width(), path_pixels);
  kernels::omp::mask_far_pixels(out.pixels, sq, radius);
  return out;
}

SemanticMap pad_and_resize(const SemanticMap& map, int pad_size, int output_size) {
  const auto& src = map.pixels;
  if (src.height() > pad_size || src.width() > pad_size)
    throw InvalidArgument("pad_and_resize: map is " + std::to_string(src.height()) + "x" +
                          std::to_string(src.width()) + " pixels, larger than " + std::to_string(pad_size) +
                          "; increase the resolution (meters per pixel)");
  if (output_size <= 0) throw InvalidArgument("pad_and_resize: output size must be positive");
  RgbImage padded(pad_size, pad_size, Rgb{0, 0, 0});
  for (int r = 0; r < src.height(); ++r)
    std::copy_n(src.bytes().begin() + std::size_t(r) * src.width() * 3, std::size_t(src.width()) * 3,
                padded.bytes().begin() + std::size_t(r) * pad_size * 3);
  SemanticMap out;
  out.pixels = kernels::omp::resize_nearest(padded, output_size, output_size);
  out.resolution = map.resolution * double(pad_size) / output_size;
  out.origin = map.origin;
  return out;
}

bool palette_closed(const RgbImage& image) {
  for (int r = 0; r < image.height(); ++r)
    for (int c = 0; c < image.width(); ++c)
      if (!Palette::contains(image.at(r, c))) return false;
  return true;
}

}  // namespace vlgen
