#pragma once

#include <functional>
#include <span>
#include <vector>

#include "evrec/sparse_operator.hpp"

namespace evrec {

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;  // relative 2-norm
  bool converged = false;
  std::vector<double> residual_history;  // relative residual after each iteration, starting with the initial one
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

/// y = A x for a symmetric positive (semi-)definite A.
using MatVec = std::function<void(std::span<const double> x, std::span<double> y)>;

inline constexpr double kDefaultTol = 1e-6;
inline constexpr int kDefaultMaxIter = 100;

/// Solves A x = rhs for symmetric positive-definite A, starting from x0.
///
/// Uses the conjugate-residual recurrence of the CG family: same Krylov space
/// and one product per iteration, but the residual 2-norm is minimized at
/// every step and therefore never increases. Singular but consistent systems
/// (rhs orthogonal to the null space) are fine. Throws BreakdownNonSPD when
/// the operator shows negative curvature.
SolveResult cg_solve(const MatVec& a, std::span<const double> rhs, std::span<const double> x0, double tol = kDefaultTol,
                     int max_iter = kDefaultMaxIter);

/// Called after each LSQR iteration with the iteration number (1-based) and
/// the current iterate.
using IterationCallback = std::function<void(int, std::span<const double>)>;

/// LSQR (Paige & Saunders) for min |op x - rhs|^2 + damp^2 |x|^2, from x = 0.
/// Stops when both the residual and normal-equation tests drop below `tol`
/// or after max_iter iterations. final_residual is |r| / |rhs|.
SolveResult lsqr_solve(const SparseOperator& op, std::span<const double> rhs, double damp = 0.0, double tol = kDefaultTol,
                       int max_iter = kDefaultMaxIter, const IterationCallback& on_iteration = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace evrec
