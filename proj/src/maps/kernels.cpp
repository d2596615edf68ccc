#include "vlgen/kernels.hpp"

#include <limits>

#include "vlgen/error.hpp"

namespace vlgen::kernels {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Large finite stand-in for "no seed" inside the envelope computation.
constexpr double kFar = 1e20;

void check_seeds(int height, int width, std::span<const PixelCoord> seeds) {
  for (auto s : seeds)
    if (s.row < 0 || s.col < 0 || s.row >= height || s.col >= width)
      throw InvalidArgument("distance seed outside the raster");
}

// One-dimensional squared distance transform of sampled function f
// (Felzenszwalb & Huttenlocher lower envelope of parabolas).
void edt_1d(const double* f, double* d, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

namespace serial {

std::vector<double> squared_distance_field(int height, int width, std::span<const PixelCoord> seeds) {
  check_seeds(height, width, seeds);
  std::vector<double> out(std::size_t(height) * width, kInf);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double best = kInf;
      for (auto s : seeds) {
        const double dr = r - s.row, dc = c - s.col;
        const double d = dr * dr + dc * dc;
        if (d < best) best = d;
      }
      out[std::size_t(r) * width + c] = best;
    }
  return out;
}

void mask_far_pixels(RgbImage& image, std::span<const double> sq, double radius) {
  const double r2 = radius * radius;
  for (int r = 0; r < image.height(); ++r)
    for (int c = 0; c < image.width(); ++c)
      if (sq[std::size_t(r) * image.width() + c] > r2) image.set(r, c, Rgb{0, 0, 0});
}

RgbImage resize_nearest(const RgbImage& src, int out_height, int out_width) {
  RgbImage out(out_height, out_width);
  for (int r = 0; r < out_height; ++r) {
    const int sr = nearest_source_index(r, src.height(), out_height);
    for (int c = 0; c < out_width; ++c) out.set(r, c, src.at(sr, nearest_source_index(c, src.width(), out_width)));
  }
  return out;
}

}  // namespace serial

namespace omp {

std::vector<double> squared_distance_field(int height, int width, std::span<const PixelCoord> seeds) {
  check_seeds(height, width, seeds);
  const std::size_t n = std::size_t(height) * width;
  std::vector<double> grid(n, kFar);
  for (auto s : seeds) grid[std::size_t(s.row) * width + s.col] = 0.0;
  if (n == 0) return grid;

  // Columns.
#pragma omp parallel
  {
    std::vector<double> f(height), d(height), z(height + 1);
    std::vector<int> v(height);
#pragma omp for schedule(static)
    for (int c = 0; c < width; ++c) {
      for (int r = 0; r < height; ++r) f[r] = grid[std::size_t(r) * width + c];
      edt_1d(f.data(), d.data(), height, v.data(), z.data());
      for (int r = 0; r < height; ++r) grid[std::size_t(r) * width + c] = d[r];
    }
  }
  // Rows.
#pragma omp parallel
  {
    std::vector<double> d(width), z(width + 1);
    std::vector<int> v(width);
#pragma omp for schedule(static)
    for (int r = 0; r < height; ++r) {
      double* row = grid.data() + std::size_t(r) * width;
      edt_1d(row, d.data(), width, v.data(), z.data());
      std::copy(d.begin(), d.end(), row);
    }
  }
  for (auto& x : grid)
    if (x >= kFar / 2) x = kInf;
  return grid;
}

void mask_far_pixels(RgbImage& image, std::span<const double> sq, double radius) {
  const double r2 = radius * radius;
  const int h = image.height(), w = image.width();
  auto& bytes = image.bytes();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = std::size_t(r) * w + c;
      if (sq[i] > r2) bytes[3 * i] = bytes[3 * i + 1] = bytes[3 * i + 2] = 0;
    }
}

RgbImage resize_nearest(const RgbImage& src, int out_height, int out_width) {
  RgbImage out(out_height, out_width);
  std::vector<int> cols(out_width);
  for (int c = 0; c < out_width; ++c) cols[c] = nearest_source_index(c, src.width(), out_width);
  const auto& in = src.bytes();
  auto& dst = out.bytes();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < out_height; ++r) {
    const std::size_t srow = std::size_t(nearest_source_index(r, src.height(), out_height)) * src.width();
    for (int c = 0; c < out_width; ++c) {
      const std::size_t s = (srow + cols[c]) * 3, d = (std::size_t(r) * out_width + c) * 3;
      dst[d] = in[s];
      dst[d + 1] = in[s + 1];
      dst[d + 2] = in[s + 2];
    }
  }
  return out;
}

}  // namespace omp
}  // namespace vlgen::kernels
