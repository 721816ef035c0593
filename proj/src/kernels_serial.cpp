#include <algorithm>
#include <cmath>

#include "evrec/kernels.hpp"

namespace evrec::kernels {

std::vector<double> gaussian_kernel_1d(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace serial {

void vote_bilinear(std::span<const Vote> votes, SensorSize grid, std::span<double> out) {
  for (const Vote& v : votes) {
    const int x0 = static_cast<int>(std::floor(v.x));
    const int y0 = static_cast<int>(std::floor(v.y));
    const double fx = v.x - x0;
    const double fy = v.y - y0;
    const double w[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
    const int dx[4] = {0, 1, 0, 1};
    const int dy[4] = {0, 0, 1, 1};
    for (int k = 0; k < 4; ++k) {
      const int xx = x0 + dx[k];
      const int yy = y0 + dy[k];
      if (w[k] != 0.0 && grid.contains(xx, yy)) {
        out[static_cast<std::size_t>(yy) * grid.width + xx] += v.weight * w[k];
      }
    }
  }
}

void convolve_separable(std::span<const double> in, SensorSize grid, std::span<const double> kernel, Border border,
                        std::span<double> out) {
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = grid.width;
  const int h = grid.height;
  std::vector<double> tmp(in.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        int xx = x + i;
        if (xx < 0 || xx >= w) {
          if (border == Border::Zero) continue;
          xx = std::clamp(xx, 0, w - 1);
        }
        acc += kernel[i + r] * in[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        int yy = y + i;
        if (yy < 0 || yy >= h) {
          if (border == Border::Zero) continue;
          yy = std::clamp(yy, 0, h - 1);
        }
        acc += kernel[i + r] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
}

void spmv(const CsrView& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    double acc = 0.0;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) acc += a.values[k] * x[a.col_idx[k]];
    y[r] = acc;
  }
}

void spmv_transpose(const CsrView& a, std::span<const double> x, std::span<double> y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) y[a.col_idx[k]] += a.values[k] * xr;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace serial
}  // namespace evrec::kernels
