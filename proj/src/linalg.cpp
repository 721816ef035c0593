#include "evrec/linalg.hpp"

#include <cmath>

#include "evrec/error.hpp"
#include "evrec/kernels.hpp"

namespace evrec {

double dot(std::span<const double> a, std::span<const double> b) { return kernels::omp::dot(a, b); }

double norm2(std::span<const double> a) { return std::sqrt(kernels::omp::dot(a, a)); }

namespace {

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale(double alpha, std::span<double> y) {
  for (double& v : y) v *= alpha;
}

}  // namespace

SolveResult cg_solve(const MatVec& a, std::span<const double> rhs, std::span<const double> x0, double tol, int max_iter) {
  const std::size_t n = rhs.size();
  if (x0.size() != n) throw Error(ErrorCode::LengthMismatch, "initial guess length differs from rhs");

  SolveResult out;
  out.x.assign(x0.begin(), x0.end());
  SolveReport& rep = out.report;

  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    out.x.assign(n, 0.0);
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    return out;
  }

  std::vector<double> r(n);
  a(out.x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
  std::vector<double> ar(n);
  a(r, ar);
  std::vector<double> p = r;
  std::vector<double> ap = ar;
  double r_ar = dot(r, ar);

  double rel = norm2(r) / bnorm;
  rep.residual_history.push_back(rel);
  rep.final_residual = rel;
  if (rel <= tol) {
    rep.converged = true;
    return out;
  }

  for (int it = 1; it <= max_iter; ++it) {
    const double rn = norm2(r);
    if (r_ar < -1e-12 * rn * norm2(ar)) throw Error(ErrorCode::BreakdownNonSPD, "negative curvature");
    const double ap2 = dot(ap, ap);
    if (r_ar <= 0.0 || ap2 <= 0.0) break;  // residual lies in the null space

    const double alpha = r_ar / ap2;
    axpy(alpha, p, out.x);
    axpy(-alpha, ap, r);
    rep.iterations = it;

    rel = norm2(r) / bnorm;
    rep.residual_history.push_back(rel);
    rep.final_residual = rel;
    if (rel <= tol) {
      rep.converged = true;
      break;
    }

    a(r, ar);
    const double r_ar_next = dot(r, ar);
    const double beta = r_ar_next / r_ar;
    r_ar = r_ar_next;
    xpby(r, beta, p);
    xpby(ar, beta, ap);
  }
  return out;
}

SolveResult lsqr_solve(const SparseOperator& op, std::span<const double> rhs, double damp, double tol, int max_iter,
                       const IterationCallback& on_iteration) {
  if (rhs.size() != op.rows()) throw Error(ErrorCode::LengthMismatch, "rhs length differs from operator rows");
  if (damp < 0.0) throw Error(ErrorCode::InvalidArgument, "damp must be >= 0");
  const std::size_t m = op.rows();
  const std::size_t n = op.cols();

  SolveResult out;
  out.x.assign(n, 0.0);
  SolveReport& rep = out.report;

  std::vector<double> u(rhs.begin(), rhs.end());
  double beta = norm2(u);
  const double bnorm = beta;
  if (beta == 0.0) {
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    return out;
  }
  scale(1.0 / beta, u);
  std::vector<double> v(n);
  apply_transpose_into(op, u, v);
  double alpha = norm2(v);
  if (alpha > 0.0) scale(1.0 / alpha, v);
  std::vector<double> w = v;
  std::vector<double> tmp_m(m);
  std::vector<double> tmp_n(n);

  double phibar = beta;
  double rhobar = alpha;
  double anorm = 0.0;
  double xxnorm = 0.0;
  double z = 0.0;
  double cs2 = -1.0;
  double sn2 = 0.0;
  rep.residual_history.push_back(1.0);
  rep.final_residual = 1.0;

  if (alpha == 0.0) {  // rhs orthogonal to the range: x = 0 is optimal
    rep.converged = true;
    return out;
  }

  double res2 = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    // Bidiagonalization step.
    apply_into(op, v, tmp_m);
    for (std::size_t i = 0; i < m; ++i) u[i] = tmp_m[i] - alpha * u[i];
    beta = norm2(u);
    if (beta > 0.0) {
      scale(1.0 / beta, u);
      anorm = std::sqrt(anorm * anorm + alpha * alpha + beta * beta + damp * damp);
      apply_transpose_into(op, u, tmp_n);
      for (std::size_t i = 0; i < n; ++i) v[i] = tmp_n[i] - beta * v[i];
      alpha = norm2(v);
      if (alpha > 0.0) scale(1.0 / alpha, v);
    }

    // Eliminate the damping term.
    double rhobar1 = rhobar;
    double psi = 0.0;
    if (damp > 0.0) {
      rhobar1 = std::hypot(rhobar, damp);
      psi = damp / rhobar1 * phibar;
      phibar = rhobar / rhobar1 * phibar;
    }

    // Plane rotation on the lower bidiagonal.
    const double rho = std::hypot(rhobar1, beta);
    const double cs = rhobar1 / rho;
    const double sn = beta / rho;
    const double theta = sn * alpha;
    rhobar = -cs * alpha;
    const double phi = cs * phibar;
    phibar = sn * phibar;
    const double tau = sn * phi;

    const double t1 = phi / rho;
    const double t2 = -theta / rho;
    axpy(t1, w, out.x);
    xpby(v, t2, w);

    // Norm estimates for the stopping rules.
    const double delta = sn2 * rho;
    const double gambar = -cs2 * rho;
    const double rhs_z = phi - delta * z;
    const double zbar = rhs_z / gambar;
    const double xnorm = std::sqrt(xxnorm + zbar * zbar);
    const double gamma = std::hypot(gambar, theta);
    cs2 = gambar / gamma;
    sn2 = theta / gamma;
    z = rhs_z / gamma;
    xxnorm += z * z;

    res2 += psi * psi;
    const double rnorm = std::sqrt(phibar * phibar + res2);
    const double arnorm = alpha * std::abs(tau);

    rep.iterations = it;
    rep.final_residual = rnorm / bnorm;
    rep.residual_history.push_back(rep.final_residual);
    if (on_iteration) on_iteration(it, out.x);

    const double test1 = rnorm / bnorm;
    const double test2 = (anorm > 0.0 && rnorm > 0.0) ? arnorm / (anorm * rnorm) : 0.0;
    const double scaled1 = test1 / (1.0 + anorm * xnorm / bnorm);
    if (test1 <= tol + tol * anorm * xnorm / bnorm || test2 <= tol) {
      rep.converged = true;
      break;
    }
    // Machine-precision stops apply even with tol = 0. Past this point the
    // bidiagonalization normalizes round-off and the iterate can drift away.
    if (1.0 + scaled1 <= 1.0 || 1.0 + test2 <= 1.0 || alpha == 0.0 || beta == 0.0) {
      rep.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace evrec
