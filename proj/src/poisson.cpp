#include "evrec/poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "evrec/error.hpp"
#include "evrec/sparse_operator.hpp"

namespace evrec {

namespace {

// FFTW planning is not thread-safe but executing a finished plan on new
// arrays is, so plans are created once per (mode, size) under a lock.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  Plans get(BoundaryMode mode, int w, int h) {
    std::lock_guard lock(mu_);
    const auto key = std::make_tuple(mode, w, h);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const std::size_t n = static_cast<std::size_t>(w) * h;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p;
    if (mode == BoundaryMode::Periodic) {
      const std::size_t nc = static_cast<std::size_t>(h) * (w / 2 + 1);
      double* re = fftw_alloc_real(n);
      fftw_complex* co = fftw_alloc_complex(nc);
      p.forward = fftw_plan_dft_r2c_2d(h, w, re, co, flags);
      p.backward = fftw_plan_dft_c2r_2d(h, w, co, re, flags);
      fftw_free(re);
      fftw_free(co);
    } else {
      double* a = fftw_alloc_real(n);
      double* b = fftw_alloc_real(n);
      p.forward = fftw_plan_r2r_2d(h, w, a, b, FFTW_REDFT10, FFTW_REDFT10, flags);
      p.backward = fftw_plan_r2r_2d(h, w, a, b, FFTW_REDFT01, FFTW_REDFT01, flags);
      fftw_free(a);
      fftw_free(b);
    }
    if (p.forward == nullptr || p.backward == nullptr) throw Error(ErrorCode::InvalidArgument, "FFTW planning failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<BoundaryMode, int, int>, Plans> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void check_pair(const Image& c, const Image& z) {
  if (c.size() != z.size()) throw Error(ErrorCode::DimensionMismatch, "Laplacian and prior images differ in size");
  if (c.width < 1 || c.height < 1) throw Error(ErrorCode::InvalidArgument, "empty Laplacian image");
}

// out = F^-1(filter(K) applied to (Fc, Fz)) with per-frequency weights
// a(K) for c and b(K) for z.
template <typename Weights>
Image diagonal_solve(const Image& c, const Image* z, BoundaryMode mode, Weights weights) {
  const int w = c.width;
  const int h = c.height;
  const std::size_t n = c.pixels();
  const Plans plans = plan_cache().get(mode, w, h);
  Image out(c.size());

  if (mode == BoundaryMode::Periodic) {
    const int wc = w / 2 + 1;
    const std::size_t nc = static_cast<std::size_t>(h) * wc;
    std::vector<double> in(c.data);
    std::vector<std::complex<double>> fc(nc), fz(nc, 0.0);
    auto* fc_ptr = reinterpret_cast<fftw_complex*>(fc.data());
    auto* fz_ptr = reinterpret_cast<fftw_complex*>(fz.data());
    fftw_execute_dft_r2c(plans.forward, in.data(), fc_ptr);
    if (z != nullptr) {
      in = z->data;
      fftw_execute_dft_r2c(plans.forward, in.data(), fz_ptr);
    }
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < wc; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * wc + i;
        const auto [a, b] = weights(laplacian_eigenvalue(i, j, w, h, mode));
        fc[k] = a * fc[k] + b * fz[k];
      }
    }
    fftw_execute_dft_c2r(plans.backward, fc_ptr, out.data.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out.data) v *= scale;
  } else {
    std::vector<double> fc(n), fz(n, 0.0);
    std::vector<double> in(c.data);
    fftw_execute_r2r(plans.forward, in.data(), fc.data());
    if (z != nullptr) {
      in = z->data;
      fftw_execute_r2r(plans.forward, in.data(), fz.data());
    }
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * w + i;
        const auto [a, b] = weights(laplacian_eigenvalue(i, j, w, h, mode));
        fc[k] = a * fc[k] + b * fz[k];
      }
    }
    fftw_execute_r2r(plans.backward, fc.data(), out.data.data());
    const double scale = 1.0 / (4.0 * static_cast<double>(n));
    for (double& v : out.data) v *= scale;
  }
  return out;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

Image apply_laplacian(const Image& img, BoundaryMode mode) {
  return mode == BoundaryMode::Periodic ? apply_stencil_periodic(img, laplacian_kernel()) : laplacian_neumann(img);
}

double laplacian_eigenvalue(int i, int j, int width, int height, BoundaryMode mode) {
  const double base = mode == BoundaryMode::Periodic ? 2.0 * std::numbers::pi : std::numbers::pi;
  return 2.0 * std::cos(base * i / width) + 2.0 * std::cos(base * j / height) - 4.0;
}

Image poisson_closed_form(const Image& c, const Image& z, double mu, BoundaryMode mode) {
  check_pair(c, z);
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(ErrorCode::NonPositiveMu, "mu must be positive");
  return diagonal_solve(c, &z, mode, [mu](double k) {
    const double den = k * k + mu;
    return std::pair{k / den, mu / den};
  });
}

Image poisson_direct(const Image& c, BoundaryMode mode) {
  check_pair(c, c);
  return diagonal_solve(c, nullptr, mode, [](double k) {
    // The DC eigenvalue is exactly zero; everything else is bounded away from it.
    return std::pair{k == 0.0 ? 0.0 : 1.0 / k, 0.0};
  });
}

ReconResult solve_poisson_pnp(const Image& c, Denoiser& denoiser, const ReconConfig& cfg, BoundaryMode mode) {
  ReconConfig pnp_cfg = cfg;
  pnp_cfg.method = Method::PnP;
  pnp_cfg.validate();
  const std::vector<double> mu = pnp_cfg.mu_schedule();

  Image z(c.size());
  ReconResult out;
  out.initial = {0.5 * sq_dist(c.data, std::vector<double>(c.pixels(), 0.0)), 0.0, 0.0, 0.0};
  out.initial.total = out.initial.data_term;

  for (double mu_k : mu) {
    Image l = poisson_closed_form(c, z, mu_k, mode);
    const double sigma = std::sqrt(cfg.lambda / mu_k);
    Image denoised;
    try {
      denoised = denoiser.denoise(l, sigma);
    } catch (const Error& e) {
      throw Error(ErrorCode::DenoiserFailure, denoiser.name() + ": " + e.what());
    }
    if (denoised.size() != c.size() || !all_finite(denoised.data)) {
      throw Error(ErrorCode::DenoiserFailure, denoiser.name() + " returned a malformed image");
    }
    z = std::move(denoised);

    const double data = 0.5 * sq_dist(apply_laplacian(z, mode).data, c.data);
    const double gap2 = sq_dist(l.data, z.data);
    out.trace.push_back({data, 0.5 * mu_k * gap2, data + 0.5 * mu_k * gap2, std::sqrt(gap2)});
    ++out.report.iterations;
  }
  out.report.converged = true;
  out.image = subtract_mean(std::move(z));
  return out;
}

}  // namespace evrec
