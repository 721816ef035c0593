#include "evrec/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "evrec/error.hpp"

namespace evrec {

// ---------------------------------------------------------------------------
// Config

ReconConfig ReconConfig::defaults_for(Method m) {
  ReconConfig cfg;
  cfg.method = m;
  cfg.lambda = m == Method::PnP ? 0.3 : 0.04;
  return cfg;
}

void ReconConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (tikhonov.lsqr_iters < 0 || tv.outer < 0 || tv.inner < 0) {
    throw Error(ErrorCode::InvalidArgument, "iteration counts must be >= 0");
  }
  if (method == Method::PnP) {
    const auto mu = mu_schedule();
    if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "empty mu schedule");
    for (std::size_t k = 0; k < mu.size(); ++k) {
      if (!(mu[k] > 0.0) || !std::isfinite(mu[k])) throw Error(ErrorCode::InvalidArgument, "mu must be positive");
      if (k > 0 && !(mu[k] > mu[k - 1])) throw Error(ErrorCode::InvalidArgument, "mu schedule must strictly increase");
    }
  }
}

std::vector<double> ReconConfig::mu_schedule() const {
  if (!pnp.mu_schedule.empty()) return pnp.mu_schedule;
  if (pnp.n_outer < 1 || !(pnp.sigma_min > 0.0) || !(pnp.sigma_max > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "PnP needs n_outer >= 1 and positive sigma endpoints");
  }
  std::vector<double> mu(pnp.n_outer);
  const int n = pnp.n_outer;
  for (int k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
    const double sigma = pnp.sigma_max * std::pow(pnp.sigma_min / pnp.sigma_max, t);
    mu[k] = lambda / (sigma * sigma);
  }
  return mu;
}

double shrink(double v, double threshold) {
  const double mag = std::abs(v) - threshold;
  return mag > 0.0 ? std::copysign(mag, v) : 0.0;
}

namespace {

void check_system(const SparseOperator& d, const Image& b) {
  if (d.rows() != b.pixels() || d.cols() != b.pixels()) {
    throw Error(ErrorCode::DimensionMismatch, "operator " + std::to_string(d.rows()) + "x" + std::to_string(d.cols()) +
                                                  " does not match a " + std::to_string(b.width) + "x" +
                                                  std::to_string(b.height) + " measurement");
  }
}

double data_energy(const SparseOperator& d, std::span<const double> b, std::span<const double> x) {
  std::vector<double> r = apply(d, x);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) acc += (b[i] - r[i]) * (b[i] - r[i]);
  return 0.5 * acc;
}

double l1(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += std::abs(x);
  return acc;
}

double sq_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

TraceEntry entry(double data, double prior, double gap = 0.0) { return {data, prior, data + prior, gap}; }

void accumulate_report(SolveReport& total, const SolveReport& step) {
  total.iterations += step.iterations;
  total.final_residual = step.final_residual;
  total.converged = step.converged;
  total.residual_history.push_back(step.final_residual);
}

QuadraticData data_from_operator(const SparseOperator& d, const Image& b) {
  QuadraticData q;
  auto tmp = std::make_shared<std::vector<double>>(d.rows());
  q.normal_op = [&d, tmp](std::span<const double> x, std::span<double> y) {
    apply_into(d, x, *tmp);
    apply_transpose_into(d, *tmp, y);
  };
  q.normal_rhs = apply_transpose(d, b.data);
  q.energy = [&d, &b](std::span<const double> x) { return data_energy(d, b.data, x); };
  return q;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tikhonov

ReconResult solve_tikhonov(const SparseOperator& d, const Image& b, const SparseOperator& g, const ReconConfig& cfg) {
  cfg.validate();
  check_system(d, b);
  if (g.cols() != d.cols()) throw Error(ErrorCode::DimensionMismatch, "gradient operator width differs from D");

  const SparseOperator system = stack(d, g, std::sqrt(2.0 * cfg.lambda));
  std::vector<double> rhs(system.rows(), 0.0);
  std::copy(b.data.begin(), b.data.end(), rhs.begin());

  ReconResult out;
  out.initial = entry(0.5 * sq_norm(b.data), 0.0);
  auto record = [&](int, std::span<const double> x) {
    const double prior = cfg.lambda * sq_norm(apply(g, x));
    out.trace.push_back(entry(data_energy(d, b.data, x), prior));
  };
  SolveResult sol = lsqr_solve(system, rhs, 0.0, cfg.tikhonov.tol, cfg.tikhonov.lsqr_iters, record);
  out.report = std::move(sol.report);
  out.image = subtract_mean(Image(b.width, b.height, std::move(sol.x)));
  return out;
}

// ---------------------------------------------------------------------------
// Split Bregman TV

SplitBregmanOutput split_bregman_tv(const QuadraticData& data, SensorSize grid, double weight, double gamma, int outer,
                                    int inner, std::span<const double> x0) {
  const std::size_t n = grid.pixels();
  if (x0.size() != n || data.normal_rhs.size() != n) throw Error(ErrorCode::LengthMismatch, "split Bregman size mismatch");
  if (gamma <= 0.0) gamma = weight > 0.0 ? 2.0 * weight : 1.0;

  const SparseOperator g = build_gradient_operator(grid);
  std::vector<double> d(g.rows(), 0.0);
  std::vector<double> bregman(g.rows(), 0.0);
  std::vector<double> gx(g.rows());
  std::vector<double> tmp_rows(g.rows());
  std::vector<double> tmp_cols(n);
  std::vector<double> rhs(n);

  SplitBregmanOutput out;
  out.x.assign(x0.begin(), x0.end());
  apply_into(g, out.x, gx);
  out.initial = entry(data.energy(out.x), weight * l1(gx));

  const MatVec op = [&](std::span<const double> x, std::span<double> y) {
    data.normal_op(x, y);
    apply_into(g, x, tmp_rows);
    apply_transpose_into(g, tmp_rows, tmp_cols);
    for (std::size_t i = 0; i < n; ++i) y[i] += gamma * tmp_cols[i];
  };

  const double threshold = weight / gamma;
  for (int k = 0; k < outer; ++k) {
    for (std::size_t i = 0; i < d.size(); ++i) tmp_rows[i] = d[i] - bregman[i];
    apply_transpose_into(g, tmp_rows, rhs);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = data.normal_rhs[i] + gamma * rhs[i];

    SolveResult sol = cg_solve(op, rhs, out.x, 1e-12, inner);
    out.x = std::move(sol.x);
    accumulate_report(out.report, sol.report);

    apply_into(g, out.x, gx);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = shrink(gx[i] + bregman[i], threshold);
      bregman[i] += gx[i] - d[i];
    }
    out.trace.push_back(entry(data.energy(out.x), weight * l1(gx)));
  }
  return out;
}

ReconResult solve_tv(const SparseOperator& d, const Image& b, const ReconConfig& cfg) {
  cfg.validate();
  check_system(d, b);
  const QuadraticData data = data_from_operator(d, b);
  const std::vector<double> x0(b.pixels(), 0.0);
  SplitBregmanOutput sb =
      split_bregman_tv(data, b.size(), cfg.lambda, cfg.tv.bregman_gamma, cfg.tv.outer, cfg.tv.inner, x0);

  ReconResult out;
  out.image = subtract_mean(Image(b.width, b.height, std::move(sb.x)));
  out.initial = sb.initial;
  out.trace = std::move(sb.trace);
  out.report = std::move(sb.report);
  return out;
}

// ---------------------------------------------------------------------------
// Plug-and-play HQS

ReconResult solve_pnp(const SparseOperator& d, const Image& b, Denoiser& denoiser, const ReconConfig& cfg) {
  cfg.validate();
  check_system(d, b);
  const std::vector<double> mu = cfg.mu_schedule();
  const std::size_t n = b.pixels();

  Image z(b.size());
  if (cfg.init == PnpInit::FromTV) {
    ReconConfig tv_cfg = cfg;
    tv_cfg.method = Method::TV;
    tv_cfg.lambda = cfg.pnp.init_lambda;
    z = solve_tv(d, b, tv_cfg).image;
  }

  const std::vector<double> dtb = apply_transpose(d, b.data);
  std::vector<double> tmp(d.rows());
  std::vector<double> rhs(n);
  std::vector<double> l = z.data;

  ReconResult out;
  out.initial = entry(data_energy(d, b.data, z.data), 0.0);

  for (double mu_k : mu) {
    const MatVec op = [&](std::span<const double> x, std::span<double> y) {
      apply_into(d, x, tmp);
      apply_transpose_into(d, tmp, y);
      for (std::size_t i = 0; i < n; ++i) y[i] += mu_k * x[i];
    };
    for (std::size_t i = 0; i < n; ++i) rhs[i] = dtb[i] + mu_k * z.data[i];
    SolveResult sol = cg_solve(op, rhs, l, cfg.pnp.cg_tol, cfg.pnp.cg_max_iter);
    l = std::move(sol.x);
    accumulate_report(out.report, sol.report);

    const double sigma = std::sqrt(cfg.lambda / mu_k);
    Image denoised;
    try {
      denoised = denoiser.denoise(Image(b.width, b.height, l), sigma);
    } catch (const Error& e) {
      throw Error(ErrorCode::DenoiserFailure, denoiser.name() + ": " + e.what());
    }
    if (denoised.size() != b.size() || !all_finite(denoised.data)) {
      throw Error(ErrorCode::DenoiserFailure, denoiser.name() + " returned a malformed image");
    }
    z = std::move(denoised);

    double gap2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) gap2 += (l[i] - z.data[i]) * (l[i] - z.data[i]);
    out.trace.push_back(entry(data_energy(d, b.data, z.data), 0.5 * mu_k * gap2, std::sqrt(gap2)));
  }
  out.image = subtract_mean(std::move(z));
  return out;
}

ReconResult solve(const SparseOperator& d, const Image& b, const ReconConfig& cfg, Denoiser* denoiser) {
  switch (cfg.method) {
    case Method::Tikhonov:
      return solve_tikhonov(d, b, build_gradient_operator(b.size()), cfg);
    case Method::TV:
      return solve_tv(d, b, cfg);
    case Method::PnP:
      if (denoiser == nullptr) throw Error(ErrorCode::InvalidArgument, "PnP needs a denoiser");
      return solve_pnp(d, b, *denoiser, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

}  // namespace evrec
