#include "evrec/sparse_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "evrec/error.hpp"

namespace evrec {

// ---------------------------------------------------------------------------
// Builder

SparseOperator::Builder::Builder(std::size_t n_cols, std::size_t expected_nnz) {
  if (n_cols > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::InvalidArgument, "operator too wide");
  op_.n_cols_ = n_cols;
  op_.col_idx_.reserve(expected_nnz);
  op_.values_.reserve(expected_nnz);
}

void SparseOperator::Builder::add(std::size_t col, double value) {
  if (col >= op_.n_cols_) throw std::logic_error("sparse column index out of range");
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "non-finite operator entry");
  pending_.emplace_back(static_cast<std::uint32_t>(col), value);
}

void SparseOperator::Builder::end_row() {
  std::stable_sort(pending_.begin(), pending_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < pending_.size();) {
    const std::uint32_t col = pending_[i].first;
    double sum = 0.0;
    for (; i < pending_.size() && pending_[i].first == col; ++i) sum += pending_[i].second;
    if (sum != 0.0) {
      op_.col_idx_.push_back(col);
      op_.values_.push_back(sum);
    }
  }
  pending_.clear();
  op_.row_ptr_.push_back(op_.values_.size());
}

void SparseOperator::Builder::empty_rows(std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) end_row();
}

SparseOperator SparseOperator::Builder::finish() && {
  if (!pending_.empty()) end_row();
  return std::move(op_);
}

// ---------------------------------------------------------------------------
// Directional derivative

namespace {

// Rounds to the 2^-52 grid. All stencil weights live in [-1, 1], so on this
// grid every partial sum of a row is exact and rows sum to exactly zero.
double quantize(double w) { return std::ldexp(std::nearbyint(std::ldexp(w, 52)), -52); }

void two_point_row(SparseOperator::Builder& b, SensorSize s, int x, int y, Vec2 dir) {
  const double px = x + dir.x;
  const double py = y + dir.y;
  const int x0 = static_cast<int>(std::floor(px));
  const int y0 = static_cast<int>(std::floor(py));
  const double fx = px - x0;
  const double fy = py - y0;
  std::array<double, 4> w = {quantize((1.0 - fx) * (1.0 - fy)), quantize(fx * (1.0 - fy)), quantize((1.0 - fx) * fy),
                             quantize(fx * fy)};
  // Push the rounding residual onto the largest weight so the four sum to 1.
  const double residual = 1.0 - (w[0] + w[1] + w[2] + w[3]);
  *std::max_element(w.begin(), w.end()) += residual;

  const int dx[4] = {0, 1, 0, 1};
  const int dy[4] = {0, 0, 1, 1};
  b.add(static_cast<std::size_t>(y) * s.width + x, 1.0);
  for (int k = 0; k < 4; ++k) {
    if (w[k] == 0.0) continue;
    const int xx = x0 + dx[k];
    const int yy = y0 + dy[k];
    if (!s.contains(xx, yy)) throw std::logic_error("bilinear support left the image");
    b.add(static_cast<std::size_t>(yy) * s.width + xx, -w[k]);
  }
}

void sobel_row(SparseOperator::Builder& b, SensorSize s, int x, int y, Vec2 dir) {
  // Kernels are odd, K(-d) = -K(d): fill one half-plane and mirror with the
  // negated value so pairs cancel exactly.
  static constexpr int half[4][2] = {{1, -1}, {1, 0}, {1, 1}, {0, 1}};
  for (const auto& d : half) {
    const int dx = d[0];
    const int dy = d[1];
    const double kx = dx * (2 - std::abs(dy)) / 8.0;
    const double ky = dy * (2 - std::abs(dx)) / 8.0;
    const double v = quantize(-(dir.x * kx + dir.y * ky));
    if (v == 0.0) continue;
    b.add(static_cast<std::size_t>(y + dy) * s.width + (x + dx), v);
    b.add(static_cast<std::size_t>(y - dy) * s.width + (x - dx), -v);
  }
}

}  // namespace

SparseOperator build_directional_operator(const FlowField& flow, SensorSize sensor, StencilKind kind, double u_min) {
  flow.check_compatible(sensor);
  SparseOperator::Builder b(sensor.pixels(), sensor.pixels() * (kind == StencilKind::TwoPoint ? 5 : 8));
  for (int y = 0; y < sensor.height; ++y) {
    for (int x = 0; x < sensor.width; ++x) {
      const bool border = x == 0 || y == 0 || x == sensor.width - 1 || y == sensor.height - 1;
      const Vec2 u = flow.at(x, y);
      const double speed = u.norm();
      if (!border && speed >= u_min) {
        const Vec2 dir{u.x / speed, u.y / speed};
        if (kind == StencilKind::TwoPoint) {
          two_point_row(b, sensor, x, y, dir);
        } else {
          sobel_row(b, sensor, x, y, dir);
        }
      }
      b.end_row();
    }
  }
  return std::move(b).finish();
}

SparseOperator build_gradient_operator(SensorSize sensor) {
  const std::size_t n = sensor.pixels();
  SparseOperator::Builder b(n, 4 * n);
  for (int y = 0; y < sensor.height; ++y) {
    for (int x = 0; x < sensor.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * sensor.width + x;
      if (x + 1 < sensor.width) {
        b.add(p, -1.0);
        b.add(p + 1, 1.0);
      }
      b.end_row();
    }
  }
  for (int y = 0; y < sensor.height; ++y) {
    for (int x = 0; x < sensor.width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * sensor.width + x;
      if (y + 1 < sensor.height) {
        b.add(p, -1.0);
        b.add(p + sensor.width, 1.0);
      }
      b.end_row();
    }
  }
  return std::move(b).finish();
}

SparseOperator stack(const SparseOperator& top, const SparseOperator& bottom, double bottom_scale) {
  if (top.cols() != bottom.cols()) throw Error(ErrorCode::DimensionMismatch, "stacked operators differ in width");
  SparseOperator::Builder b(top.cols(), top.nnz() + bottom.nnz());
  for (std::size_t r = 0; r < top.rows(); ++r) {
    const auto cols = top.row_cols(r);
    const auto vals = top.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) b.add(cols[k], vals[k]);
    b.end_row();
  }
  for (std::size_t r = 0; r < bottom.rows(); ++r) {
    const auto cols = bottom.row_cols(r);
    const auto vals = bottom.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) b.add(cols[k], bottom_scale * vals[k]);
    b.end_row();
  }
  return std::move(b).finish();
}

SparseOperator identity_operator(std::size_t n) {
  SparseOperator::Builder b(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    b.add(i, 1.0);
    b.end_row();
  }
  return std::move(b).finish();
}

// ---------------------------------------------------------------------------
// Products

void apply_into(const SparseOperator& op, std::span<const double> v, std::span<double> out) {
  if (v.size() != op.cols() || out.size() != op.rows()) {
    throw Error(ErrorCode::LengthMismatch, "operator is " + std::to_string(op.rows()) + "x" +
                                               std::to_string(op.cols()) + ", vector has " + std::to_string(v.size()));
  }
  kernels::omp::spmv(op.view(), v, out);
}

void apply_transpose_into(const SparseOperator& op, std::span<const double> v, std::span<double> out) {
  if (v.size() != op.rows() || out.size() != op.cols()) {
    throw Error(ErrorCode::LengthMismatch, "transpose of " + std::to_string(op.rows()) + "x" +
                                               std::to_string(op.cols()) + " applied to length " +
                                               std::to_string(v.size()));
  }
  kernels::omp::spmv_transpose(op.view(), v, out);
}

std::vector<double> apply(const SparseOperator& op, std::span<const double> v) {
  std::vector<double> out(op.rows());
  apply_into(op, v, out);
  return out;
}

std::vector<double> apply_transpose(const SparseOperator& op, std::span<const double> v) {
  std::vector<double> out(op.cols());
  apply_transpose_into(op, v, out);
  return out;
}

// ---------------------------------------------------------------------------
// Laplacian

Stencil3 laplacian_kernel() { return {{{0.0, 1.0, 0.0}, {1.0, -4.0, 1.0}, {0.0, 1.0, 0.0}}}; }

Image apply_stencil_periodic(const Image& img, const Stencil3& k) {
  Image out(img.size());
  const int w = img.width;
  const int h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = -1; j <= 1; ++j) {
        const int yy = ((y + j) % h + h) % h;
        for (int i = -1; i <= 1; ++i) {
          const double kv = k[j + 1][i + 1];
          if (kv != 0.0) acc += kv * img.at(((x + i) % w + w) % w, yy);
        }
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

Image laplacian_neumann(const Image& img) {
  Image out(img.size());
  const int w = img.width;
  const int h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = img.at(x, y);
      out.at(x, y) = img.at(std::max(x - 1, 0), y) + img.at(std::min(x + 1, w - 1), y) + img.at(x, std::max(y - 1, 0)) +
                     img.at(x, std::min(y + 1, h - 1)) - 4.0 * c;
    }
  }
  return out;
}

}  // namespace evrec
