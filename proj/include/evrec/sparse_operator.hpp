#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "evrec/event_io.hpp"
#include "evrec/image.hpp"
#include "evrec/kernels.hpp"
#include "evrec/motion.hpp"

namespace evrec {

/// Immutable compressed-row sparse matrix. Column indices are strictly
/// increasing within a row and every stored value is finite and nonzero.
class SparseOperator {
 public:
  SparseOperator() = default;

  std::size_t rows() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return std::span(col_idx_).subspan(row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
  }
  std::span<const double> row_values(std::size_t r) const {
    return std::span(values_).subspan(row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]);
  }

  kernels::CsrView view() const { return {rows(), n_cols_, row_ptr_, col_idx_, values_}; }

  class Builder;

 private:
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

/// Row-by-row assembly. Entries of the current row may arrive in any order;
/// duplicates are summed and exact zeros dropped when the row is closed.
class SparseOperator::Builder {
 public:
  explicit Builder(std::size_t n_cols, std::size_t expected_nnz = 0);

  void add(std::size_t col, double value);
  void end_row();
  void empty_rows(std::size_t n);
  SparseOperator finish() &&;

 private:
  SparseOperator op_;
  std::vector<std::pair<std::uint32_t, double>> pending_;
};

enum class StencilKind { TwoPoint, Sobel9 };

/// Directional-derivative operator D with (D l)(x) ~ l(x) - l(x + u_hat(x)).
/// TwoPoint interpolates l(x + u_hat) bilinearly (<= 5 nonzeros per row).
/// Sobel9 uses -(u_hat_x Sx + u_hat_y Sy) with ramp-normalized 3x3 Sobel
/// kernels (<= 9 nonzeros). Border pixels and pixels with |u| < u_min get
/// empty rows. Every row sums to exactly zero.
SparseOperator build_directional_operator(const FlowField& flow, SensorSize sensor, StencilKind kind,
                                          double u_min = kDefaultMinFlow);

/// Forward differences, rows [0, n) hold Gx and rows [n, 2n) hold Gy; the
/// last column (row) of each has zero gradient.
SparseOperator build_gradient_operator(SensorSize sensor);

/// [top; scale * bottom]; column counts must agree.
SparseOperator stack(const SparseOperator& top, const SparseOperator& bottom, double bottom_scale = 1.0);

/// Identity, mainly for tests and denoising problems.
SparseOperator identity_operator(std::size_t n);

std::vector<double> apply(const SparseOperator& op, std::span<const double> v);
std::vector<double> apply_transpose(const SparseOperator& op, std::span<const double> v);
void apply_into(const SparseOperator& op, std::span<const double> v, std::span<double> out);
void apply_transpose_into(const SparseOperator& op, std::span<const double> v, std::span<double> out);

using Stencil3 = std::array<std::array<double, 3>, 3>;

/// 5-point Laplacian [[0,1,0],[1,-4,1],[0,1,0]].
Stencil3 laplacian_kernel();

/// 3x3 correlation with periodic wrap-around.
Image apply_stencil_periodic(const Image& img, const Stencil3& k);

/// 5-point Laplacian with replicated edges (mirror ghost cells), the forward
/// model diagonalized by the DCT-II.
Image laplacian_neumann(const Image& img);

}  // namespace evrec
