#pragma once

#include <functional>
#include <span>
#include <vector>

#include "evrec/denoise.hpp"
#include "evrec/image.hpp"
#include "evrec/linalg.hpp"
#include "evrec/sparse_operator.hpp"

namespace evrec {

enum class Method { Tikhonov, TV, PnP };
enum class PnpInit { Zero, FromTV };

struct TikhonovConfig {
  int lsqr_iters = 100;
  double tol = 1e-9;
};

struct TvConfig {
  int outer = 20;            // Bregman updates
  int inner = 10;            // CG iterations per quadratic solve
  double bregman_gamma = 0;  // <= 0 selects 2 * lambda
};

struct PnpConfig {
  int n_outer = 16;
  double sigma_max = 0.25;
  double sigma_min = 0.01;
  std::vector<double> mu_schedule;  // explicit schedule; overrides the sigma endpoints when non-empty
  int cg_max_iter = kDefaultMaxIter;
  double cg_tol = kDefaultTol;
  double init_lambda = 0.04;  // TV weight for the FromTV initialization
};

struct ReconConfig {
  Method method = Method::Tikhonov;
  double lambda = 0.04;
  TikhonovConfig tikhonov;
  TvConfig tv;
  PnpConfig pnp;
  PnpInit init = PnpInit::FromTV;

  /// Defaults per method: lambda 0.04 for Tikhonov and TV, 0.3 for PnP.
  static ReconConfig defaults_for(Method m);

  void validate() const;

  /// mu_k = lambda / sigma_k^2 with sigma_k log-uniform from sigma_max down
  /// to sigma_min, unless pnp.mu_schedule is given.
  std::vector<double> mu_schedule() const;
};

struct TraceEntry {
  double data_term = 0.0;   // 1/2 |b - D l|^2
  double prior_term = 0.0;  // lambda R(l); for PnP the coupling mu/2 |l - z|^2
  double total = 0.0;
  double gap = 0.0;  // PnP only: |l_k - z_k|
};

struct ReconResult {
  Image image;  // mean-free
  TraceEntry initial;
  std::vector<TraceEntry> trace;  // one entry per outer iteration
  SolveReport report;
};

/// min 1/2 |b - D l|^2 + lambda |G l|^2 by LSQR on [D; sqrt(2 lambda) G], from zero.
ReconResult solve_tikhonov(const SparseOperator& d, const Image& b, const SparseOperator& g, const ReconConfig& cfg);

/// min 1/2 |b - D l|^2 + lambda (|Gx l|_1 + |Gy l|_1) by split Bregman, from zero.
ReconResult solve_tv(const SparseOperator& d, const Image& b, const ReconConfig& cfg);

/// Half-quadratic splitting with a plug-in Gaussian denoiser:
///   l_k = (D'D + mu_k I)^-1 (D'b + mu_k z_{k-1}),  z_k = denoiser(l_k, sqrt(lambda / mu_k)).
ReconResult solve_pnp(const SparseOperator& d, const Image& b, Denoiser& denoiser, const ReconConfig& cfg);

/// Dispatch on cfg.method; `denoiser` is required for PnP.
ReconResult solve(const SparseOperator& d, const Image& b, const ReconConfig& cfg, Denoiser* denoiser = nullptr);

/// Soft threshold sign(v) max(|v| - t, 0).
double shrink(double v, double threshold);

/// Quadratic data term given through its normal equations: A'A and A'b, plus
/// the value 1/2 |A x - b|^2 for traces.
struct QuadraticData {
  MatVec normal_op;
  std::vector<double> normal_rhs;
  std::function<double(std::span<const double>)> energy;
};

struct SplitBregmanOutput {
  std::vector<double> x;
  TraceEntry initial;
  std::vector<TraceEntry> trace;
  SolveReport report;
};

/// Anisotropic-TV split Bregman on an image grid, shared by solve_tv and the
/// TV denoiser: min data(x) + weight (|Gx x|_1 + |Gy x|_1).
SplitBregmanOutput split_bregman_tv(const QuadraticData& data, SensorSize grid, double weight, double gamma, int outer,
                                    int inner, std::span<const double> x0);

}  // namespace evrec
