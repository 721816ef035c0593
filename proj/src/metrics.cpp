#include "evrec/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evrec/error.hpp"
#include "evrec/kernels.hpp"

namespace evrec {

namespace {

void check_same(const Image& a, const Image& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "images differ in size");
}

constexpr int kWin = 11;
constexpr double kWinSigma = 1.5;

// Valid-region separable filtering with the SSIM window.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, const std::vector<double>& k) {
  const int ow = w - kWin + 1;
  const int oh = h - kWin + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * in[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

std::vector<double> ssim_window() {
  std::vector<double> k(kWin);
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    k[i] = std::exp(-d * d / (2 * kWinSigma * kWinSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same(a, b);
  if (a.data.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels(); ++i) acc += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return acc / static_cast<double>(a.pixels());
}

double ssim(const Image& a, const Image& b) {
  check_same(a, b);
  if (a.width < kWin || a.height < kWin) throw Error(ErrorCode::InvalidArgument, "SSIM needs at least 11x11 pixels");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto k = ssim_window();
  const std::size_t n = a.pixels();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  const int w = a.width;
  const int h = a.height;
  const auto mu_a = filter_valid(a.data, w, h, k);
  const auto mu_b = filter_valid(b.data, w, h, k);
  const auto e_aa = filter_valid(aa, w, h, k);
  const auto e_bb = filter_valid(bb, w, h, k);
  const auto e_ab = filter_valid(ab, w, h, k);

  double acc = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

Image hist_equalize(const Image& img) {
  constexpr int kBins = 256;
  Image out(img.size());
  if (img.data.empty()) return out;
  const double lo = min_value(img);
  const double hi = max_value(img);
  if (!(hi > lo)) return out;

  auto bin_of = [&](double v) { return std::clamp(static_cast<int>((v - lo) / (hi - lo) * kBins), 0, kBins - 1); };
  std::array<std::size_t, kBins> hist{};
  for (double v : img.data) ++hist[bin_of(v)];
  std::array<std::size_t, kBins> cdf{};
  std::size_t run = 0;
  for (int i = 0; i < kBins; ++i) cdf[i] = run += hist[i];

  const std::size_t cdf_min = *std::find_if(cdf.begin(), cdf.end(), [](std::size_t c) { return c > 0; });
  const double denom = static_cast<double>(img.pixels() - cdf_min);
  if (denom == 0.0) return out;
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    out.data[i] = static_cast<double>(cdf[bin_of(img.data[i])] - cdf_min) / denom;
  }
  return out;
}

AffineFit fit_affine(const Image& pred, const Image& gt) {
  check_same(pred, gt);
  AffineFit fit;
  const double mp = mean(pred.data);
  const double mg = mean(gt.data);
  double spp = 0.0;
  double spg = 0.0;
  for (std::size_t i = 0; i < pred.pixels(); ++i) {
    spp += (pred.data[i] - mp) * (pred.data[i] - mp);
    spg += (pred.data[i] - mp) * (gt.data[i] - mg);
  }
  if (!(spp > 0.0)) {
    fit.degenerate = true;
    fit.beta = mg;
    return fit;
  }
  fit.alpha = spg / spp;
  fit.beta = mg - fit.alpha * mp;
  return fit;
}

Image align_mean_scale(const Image& pred, const Image& gt, AffineFit* fit_out) {
  const AffineFit fit = fit_affine(pred, gt);
  if (fit_out != nullptr) *fit_out = fit;
  Image out(pred.size());
  for (std::size_t i = 0; i < pred.pixels(); ++i) out.data[i] = fit.alpha * pred.data[i] + fit.beta;
  return out;
}

double pearson(const Image& a, const Image& b) {
  check_same(a, b);
  const double ma = mean(a.data);
  const double mb = mean(b.data);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.pixels(); ++i) {
    sab += (a.data[i] - ma) * (b.data[i] - mb);
    saa += (a.data[i] - ma) * (a.data[i] - ma);
    sbb += (b.data[i] - mb) * (b.data[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

MetricReport evaluate(const Image& pred, const Image& gt, bool equalize, bool align) {
  MetricReport report;
  check_same(pred, gt);
  report.fit = {1.0, 0.0, false};
  const Image aligned = align ? align_mean_scale(pred, gt, &report.fit) : pred;
  const double lo = min_value(gt);
  const double hi = max_value(gt);
  Image p = map_range(aligned, lo, hi);
  Image g = map_range(gt, lo, hi);
  if (equalize) {
    p = hist_equalize(p);
    g = hist_equalize(g);
  }
  report.mse = mse(p, g);
  report.ssim = ssim(p, g);
  return report;
}

}  // namespace evrec
