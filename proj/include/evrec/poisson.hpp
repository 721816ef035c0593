#pragma once

#include "evrec/denoise.hpp"
#include "evrec/image.hpp"
#include "evrec/regularizers.hpp"

namespace evrec {

/// Periodic boundaries are diagonalized by the DFT, replicated (Neumann)
/// boundaries by the DCT-II.
enum class BoundaryMode { Periodic, Neumann };

/// 5-point Laplacian k under the given boundary handling.
Image apply_laplacian(const Image& img, BoundaryMode mode);

/// Transform-domain eigenvalue of the 5-point Laplacian at frequency (i, j) of
/// a width x height grid.
double laplacian_eigenvalue(int i, int j, int width, int height, BoundaryMode mode);

/// argmin_l |k * l - c|^2 + mu |l - z|^2, evaluated exactly in the transform
/// domain: F^-1((K Fc + mu Fz) / (K^2 + mu)). Throws NonPositiveMu for mu <= 0.
Image poisson_closed_form(const Image& c, const Image& z, double mu, BoundaryMode mode);

/// Least-squares inverse of the Laplacian (pseudo-inverse, zero DC).
Image poisson_direct(const Image& c, BoundaryMode mode);

/// Half-quadratic splitting from z_0 = 0 under cfg's mu schedule, alternating
/// the closed form above with z_k = denoiser(l_k, sqrt(lambda / mu_k)).
/// Output is z_n, mean-free.
ReconResult solve_poisson_pnp(const Image& c, Denoiser& denoiser, const ReconConfig& cfg, BoundaryMode mode);

}  // namespace evrec
