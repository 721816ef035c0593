#include "evrec/image.hpp"

#include <algorithm>
#include <numeric>

#include "evrec/error.hpp"

namespace evrec {

Image::Image(int w, int h, double fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw Error(ErrorCode::InvalidArgument, "negative image dimensions");
  data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

Image::Image(int w, int h, std::vector<double> values) : width(w), height(h), data(std::move(values)) {
  if (w < 0 || h < 0 || data.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw Error(ErrorCode::DimensionMismatch, "image data length does not match width x height");
  }
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double min_value(const Image& img) {
  return img.data.empty() ? 0.0 : *std::min_element(img.data.begin(), img.data.end());
}

double max_value(const Image& img) {
  return img.data.empty() ? 0.0 : *std::max_element(img.data.begin(), img.data.end());
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Image subtract_mean(Image img) {
  const double m = mean(img.data);
  for (double& v : img.data) v -= m;
  return img;
}

Image map_range(const Image& img, double lo, double hi) {
  Image out(img.width, img.height);
  const double span = hi - lo;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = span > 0.0 ? std::clamp((img.data[i] - lo) / span, 0.0, 1.0) : 0.5;
  }
  return out;
}

double percentile(std::span<const double> v, double pct) {
  if (v.empty()) return 0.0;
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Image percentile_map(const Image& img, double lo_pct, double hi_pct) {
  return map_range(img, percentile(img.data, lo_pct), percentile(img.data, hi_pct));
}

double sample_bilinear(const Image& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1.0 - fy) * ((1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
         fy * ((1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

namespace {

double cubic_weight(double t) {
  // Catmull-Rom (a = -0.5)
  t = std::abs(t);
  if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

}  // namespace

Image upsample_bicubic(const Image& img, int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidArgument, "scale must be >= 1");
  if (scale == 1) return img;
  Image out(img.width * scale, img.height * scale);
  for (int Y = 0; Y < out.height; ++Y) {
    const double sy = static_cast<double>(Y) / scale;
    const int iy = static_cast<int>(std::floor(sy));
    for (int X = 0; X < out.width; ++X) {
      const double sx = static_cast<double>(X) / scale;
      const int ix = static_cast<int>(std::floor(sx));
      double acc = 0.0;
      for (int j = -1; j <= 2; ++j) {
        const double wy = cubic_weight(sy - (iy + j));
        const int yy = std::clamp(iy + j, 0, img.height - 1);
        for (int i = -1; i <= 2; ++i) {
          const int xx = std::clamp(ix + i, 0, img.width - 1);
          acc += wy * cubic_weight(sx - (ix + i)) * img.at(xx, yy);
        }
      }
      out.at(X, Y) = acc;
    }
  }
  return out;
}

Image downsample_box(const Image& img, int scale) {
  if (scale < 1 || img.width % scale != 0 || img.height % scale != 0) {
    throw Error(ErrorCode::DimensionMismatch, "image dimensions not divisible by scale");
  }
  Image out(img.width / scale, img.height / scale);
  const double inv = 1.0 / (scale * scale);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) out.at(x / scale, y / scale) += img.at(x, y) * inv;
  }
  return out;
}

}  // namespace evrec
