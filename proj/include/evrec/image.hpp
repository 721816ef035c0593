#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace evrec {

struct SensorSize {
  int width = 0;
  int height = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool operator==(const SensorSize&) const = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
  bool operator==(const Vec2&) const = default;
};

/// Dense row-major scalar field. Index (x, y) lives at data[y * width + x].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, double fill = 0.0);
  Image(int w, int h, std::vector<double> values);
  explicit Image(SensorSize size, double fill = 0.0) : Image(size.width, size.height, fill) {}

  SensorSize size() const { return {width, height}; }
  std::size_t pixels() const { return data.size(); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  double& at(int x, int y) { return data[index(x, y)]; }
  double at(int x, int y) const { return data[index(x, y)]; }

  bool operator==(const Image&) const = default;
};

double mean(std::span<const double> v);
double min_value(const Image& img);
double max_value(const Image& img);
bool all_finite(std::span<const double> v);

/// Returns `img` with its mean removed (fixes the additive gauge).
Image subtract_mean(Image img);

/// Linear map of [lo, hi] to [0, 1] with clamping; a zero-width range maps to 0.5.
Image map_range(const Image& img, double lo, double hi);

/// Value at the given percentile (0..100), linear interpolation between order statistics.
double percentile(std::span<const double> v, double pct);

/// Robust display mapping: percentiles [lo_pct, hi_pct] map to [0, 1].
Image percentile_map(const Image& img, double lo_pct = 1.0, double hi_pct = 99.0);

/// Bilinear sample with edge clamping.
double sample_bilinear(const Image& img, double x, double y);

/// Catmull-Rom bicubic upsampling by an integer factor; output pixel X samples
/// input position X / scale (the same grid alignment as event coordinate scaling).
Image upsample_bicubic(const Image& img, int scale);

/// Box average over scale x scale blocks. Dimensions must be divisible by scale.
Image downsample_box(const Image& img, int scale);

}  // namespace evrec
