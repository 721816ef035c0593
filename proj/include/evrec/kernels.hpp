#pragma once

// Data-parallel inner loops. Each kernel has a plain serial reference and an
// OpenMP version. The OpenMP versions partition work into a fixed number of
// chunks that depends only on the problem size, never on the thread count, so
// their results are bit-identical for any number of threads. They may differ
// from the serial reference in the last bits where a chunked reduction changes
// the summation order.

#include <cstddef>
#include <cstdint>
#include <span>

#include "evrec/image.hpp"

namespace evrec::kernels {

/// Non-owning compressed-row view of a sparse matrix.
struct CsrView {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::span<const std::size_t> row_ptr;  // n_rows + 1
  std::span<const std::uint32_t> col_idx;
  std::span<const double> values;
};

/// One bilinear vote of `weight` at fractional position (x, y).
struct Vote {
  double x = 0.0;
  double y = 0.0;
  double weight = 0.0;
};

enum class Border { Zero, Replicate };

/// Unit-sum 1D Gaussian, radius ceil(3 sigma). sigma == 0 gives {1}.
std::vector<double> gaussian_kernel_1d(double sigma);

namespace serial {
void vote_bilinear(std::span<const Vote> votes, SensorSize grid, std::span<double> out);
void convolve_separable(std::span<const double> in, SensorSize grid, std::span<const double> kernel, Border border,
                        std::span<double> out);
void spmv(const CsrView& a, std::span<const double> x, std::span<double> y);
void spmv_transpose(const CsrView& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace serial

namespace omp {
void vote_bilinear(std::span<const Vote> votes, SensorSize grid, std::span<double> out);
void convolve_separable(std::span<const double> in, SensorSize grid, std::span<const double> kernel, Border border,
                        std::span<double> out);
void spmv(const CsrView& a, std::span<const double> x, std::span<double> y);
void spmv_transpose(const CsrView& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace omp

/// Number of OpenMP threads the library uses (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace evrec::kernels
