#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "evrec/kernels.hpp"

namespace evrec::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(std::max(1, n));
#else
  (void)n;
#endif
}

namespace omp {

namespace {

// Chunk counts are functions of the problem size only.
constexpr std::size_t kVotesPerChunk = 8192;
constexpr std::size_t kMaxVoteChunks = 8;
constexpr std::size_t kRowsPerChunk = 4096;
constexpr std::size_t kMaxRowChunks = 16;
constexpr std::size_t kDotBlock = 4096;

std::size_t chunk_count(std::size_t n, std::size_t per_chunk, std::size_t max_chunks) {
  return std::clamp<std::size_t>((n + per_chunk - 1) / per_chunk, 1, max_chunks);
}

std::size_t chunk_begin(std::size_t n, std::size_t chunks, std::size_t c) { return n * c / chunks; }

}  // namespace

void vote_bilinear(std::span<const Vote> votes, SensorSize grid, std::span<double> out) {
  const std::size_t chunks = chunk_count(votes.size(), kVotesPerChunk, kMaxVoteChunks);
  if (chunks == 1) {
    serial::vote_bilinear(votes, grid, out);
    return;
  }
  const std::size_t n_pix = grid.pixels();
  std::vector<double> partial(chunks * n_pix, 0.0);
  const auto n_chunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    const std::size_t b = chunk_begin(votes.size(), chunks, c);
    const std::size_t e = chunk_begin(votes.size(), chunks, c + 1);
    serial::vote_bilinear(votes.subspan(b, e - b), grid, std::span<double>(partial).subspan(c * n_pix, n_pix));
  }
  const auto n = static_cast<std::ptrdiff_t>(n_pix);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = out[i];
    for (std::size_t c = 0; c < chunks; ++c) acc += partial[c * n_pix + i];
    out[i] = acc;
  }
}

void convolve_separable(std::span<const double> in, SensorSize grid, std::span<const double> kernel, Border border,
                        std::span<double> out) {
  const int r = static_cast<int>(kernel.size() / 2);
  const int w = grid.width;
  const int h = grid.height;
  std::vector<double> tmp(in.size(), 0.0);
#pragma omp parallel for schedule(static)
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
#pragma omp parallel for schedule(static)
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
  const auto n = static_cast<std::ptrdiff_t>(a.n_rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    double acc = 0.0;
    for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) acc += a.values[k] * x[a.col_idx[k]];
    y[r] = acc;
  }
}

void spmv_transpose(const CsrView& a, std::span<const double> x, std::span<double> y) {
  const std::size_t chunks = chunk_count(a.n_rows, kRowsPerChunk, kMaxRowChunks);
  if (chunks == 1) {
    serial::spmv_transpose(a, x, y);
    return;
  }
  // Each row chunk scatters into a private buffer covering only the column
  // range it touches; stencil operators keep these ranges narrow.
  std::vector<std::size_t> lo(chunks, 0);
  std::vector<std::size_t> hi(chunks, 0);  // exclusive
  std::vector<std::vector<double>> partial(chunks);
  const auto n_chunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    const std::size_t rb = chunk_begin(a.n_rows, chunks, c);
    const std::size_t re = chunk_begin(a.n_rows, chunks, c + 1);
    std::size_t cmin = a.n_cols;
    std::size_t cmax = 0;
    for (std::size_t k = a.row_ptr[rb]; k < a.row_ptr[re]; ++k) {
      cmin = std::min<std::size_t>(cmin, a.col_idx[k]);
      cmax = std::max<std::size_t>(cmax, a.col_idx[k] + 1);
    }
    if (cmin >= cmax) continue;
    lo[c] = cmin;
    hi[c] = cmax;
    auto& buf = partial[c];
    buf.assign(cmax - cmin, 0.0);
    for (std::size_t r = rb; r < re; ++r) {
      const double xr = x[r];
      if (xr == 0.0) continue;
      for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) buf[a.col_idx[k] - cmin] += a.values[k] * xr;
    }
  }
  // Merge chunk by chunk so every column still sums in ascending chunk order.
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    const auto b = static_cast<std::ptrdiff_t>(lo[c]);
    const auto e = static_cast<std::ptrdiff_t>(hi[c]);
    const double* buf = partial[c].data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = b; j < e; ++j) y[j] += buf[j - b];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t blocks = (a.size() + kDotBlock - 1) / kDotBlock;
  if (blocks <= 1) return serial::dot(a, b);
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nb; ++i) {
    const std::size_t s = i * kDotBlock;
    const std::size_t e = std::min(a.size(), s + kDotBlock);
    partial[i] = serial::dot(a.subspan(s, e - s), b.subspan(s, e - s));
  }
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc;
}

}  // namespace omp
}  // namespace evrec::kernels
