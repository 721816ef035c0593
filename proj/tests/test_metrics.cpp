#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "evrec/kernels.hpp"
#include "evrec/metrics.hpp"
#include "testkit.hpp"

using namespace evrec;
using testkit::error_code;

namespace {

// Direct-formula SSIM: weighted moments per window position with a 2D
// Gaussian computed from scratch.
double ssim_oracle(const Image& a, const Image& b) {
  const int r = 5;
  double w2[11][11], sum = 0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) sum += w2[j + r][i + r] = std::exp(-(i * i + j * j) / (2 * 1.5 * 1.5));
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0;
  int count = 0;
  for (int y = r; y < a.height - r; ++y)
    for (int x = r; x < a.width - r; ++x) {
      double ma = 0, mb = 0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) {
          const double w = w2[j + r][i + r] / sum;
          ma += w * a.at(x + i, y + j);
          mb += w * b.at(x + i, y + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i) {
          const double w = w2[j + r][i + r] / sum;
          const double da = a.at(x + i, y + j) - ma, db = b.at(x + i, y + j) - mb;
          va += w * da * da;
          vb += w * db * db;
          cov += w * da * db;
        }
      acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

Image smooth_random(std::mt19937_64& rng, int w, int h) {
  const Image noise = testkit::random_image(rng, w, h, -1, 1);
  Image out(w, h);
  kernels::serial::convolve_separable(noise.data, {w, h}, kernels::gaussian_kernel_1d(3.0), kernels::Border::Replicate,
                                      out.data);
  return out;
}

double max_bin_mass(const Image& img) {
  const double lo = min_value(img), hi = max_value(img);
  std::vector<double> bins(256, 0.0);
  for (double v : img.data) bins[std::clamp(static_cast<int>((v - lo) / (hi - lo) * 256), 0, 255)] += 1.0;
  return *std::max_element(bins.begin(), bins.end()) / static_cast<double>(img.pixels());
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mse") {
  std::mt19937_64 rng(1);
  const Image a = testkit::random_image(rng, 13, 9), b = testkit::random_image(rng, 13, 9);
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(Image(4, 4, 0.0), Image(4, 4, 1.0)) == 1.0);
  double acc = 0;
  for (std::size_t i = 0; i < a.pixels(); ++i) acc += std::pow(a.data[i] - b.data[i], 2);
  CHECK(mse(a, b) == doctest::Approx(acc / a.pixels()).epsilon(1e-12));
  CHECK(error_code([] { mse(Image(2, 2), Image(2, 3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("ssim") {
  std::mt19937_64 rng(2);
  const Image a = testkit::random_image(rng, 24, 20), b = testkit::random_image(rng, 24, 20);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(Image(16, 16, 0.0), Image(16, 16, 1.0)) < 0.01);
  CHECK(std::abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-9);
  const Image sa = smooth_random(rng, 30, 30), sb = smooth_random(rng, 30, 30);
  CHECK(std::abs(ssim(sa, sb) - ssim_oracle(sa, sb)) < 1e-9);
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
  Image neg = a;
  for (double& v : neg.data) v = 1 - v;
  const double s = ssim(a, neg);
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);
  CHECK(s < 0.0);
  CHECK(error_code([] { ssim(Image(10, 10), Image(10, 10)); }) == ErrorCode::InvalidArgument);
  CHECK(error_code([] { ssim(Image(12, 12), Image(12, 11)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("histogram equalization basics") {
  for (double v : hist_equalize(Image(5, 5, 0.3)).data) CHECK(v == 0.0);

  Image ramp(64, 64);
  for (std::size_t i = 0; i < ramp.pixels(); ++i) ramp.data[i] = static_cast<double>(i % 256) / 255.0;
  const Image eq = hist_equalize(ramp);
  for (std::size_t i = 0; i < ramp.pixels(); ++i) CHECK(std::abs(eq.data[i] - ramp.data[i]) < 1.0 / 256);

  std::mt19937_64 rng(3);
  const Image img = smooth_random(rng, 96, 96);
  const Image out = hist_equalize(img);
  CHECK(min_value(out) == 0.0);
  CHECK(max_value(out) == 1.0);
  // monotone non-decreasing map
  std::vector<std::size_t> order(img.pixels());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return img.data[i] < img.data[j]; });
  for (std::size_t k = 1; k < order.size(); ++k) CHECK(out.data[order[k - 1]] <= out.data[order[k]]);
}

TEST_CASE("histogram equalization flattens a smooth image") {
  std::mt19937_64 rng(4);
  const Image out = hist_equalize(smooth_random(rng, 128, 128));
  // measured on 32 output bins: each collects about eight input levels
  std::vector<double> bins(32, 0.0);
  for (double v : out.data) bins[std::min(static_cast<int>(v * 32), 31)] += 1.0;
  const double ideal = static_cast<double>(out.pixels()) / 32;
  CHECK(*std::max_element(bins.begin(), bins.end()) <= 2 * ideal);
}

TEST_CASE("histogram equalization under monotone transforms") {
  std::mt19937_64 rng(5);
  const Image img = testkit::random_image(rng, 128, 128);
  Image affine = img, curved = img;
  for (double& v : affine.data) v = 3 * v - 1;
  for (double& v : curved.data) v = std::sqrt(v + 0.5);
  const Image base = hist_equalize(img);
  const Image ea = hist_equalize(affine), ec = hist_equalize(curved);
  const double bound = std::max(max_bin_mass(img), max_bin_mass(curved)) + 1.0 / img.pixels();
  CHECK(bound < 2.0 / 256);
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    CHECK(std::abs(ea.data[i] - base.data[i]) <= bound);
    CHECK(std::abs(ec.data[i] - base.data[i]) <= bound);
  }
}

TEST_CASE("affine fit") {
  std::mt19937_64 rng(6);
  const Image gt = testkit::random_image(rng, 16, 12, -1, 1);
  AffineFit f = fit_affine(gt, gt);
  CHECK(f.alpha == doctest::Approx(1.0));
  CHECK(std::abs(f.beta - (0.0)) < 1e-12);

  Image pred = gt;
  for (double& v : pred.data) v = 2 * v + 3;
  const Image aligned = align_mean_scale(pred, gt, &f);
  CHECK(f.alpha == doctest::Approx(0.5));
  CHECK(f.beta == doctest::Approx(-1.5));
  CHECK(mse(aligned, gt) < 1e-24);

  const Image p = testkit::random_image(rng, 16, 12, -2, 5);
  Eigen::MatrixXd a(p.pixels(), 2);
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = p.data[i];
    a(static_cast<Eigen::Index>(i), 1) = 1.0;
  }
  const Eigen::Vector2d sol = a.colPivHouseholderQr().solve(testkit::vec(gt.data));
  f = fit_affine(p, gt);
  CHECK(std::abs(f.alpha - sol(0)) < 1e-10);
  CHECK(std::abs(f.beta - sol(1)) < 1e-10);

  f = fit_affine(Image(16, 12, 4.0), gt);
  CHECK(f.degenerate);
  CHECK(f.alpha == 0.0);
  CHECK(f.beta == doctest::Approx(mean(gt.data)));
  for (double v : align_mean_scale(Image(16, 12, 4.0), gt).data) CHECK(v == doctest::Approx(mean(gt.data)));
}

TEST_CASE("pearson and the evaluation protocol") {
  std::mt19937_64 rng(7);
  const Image gt = smooth_random(rng, 32, 32);
  Image pred = gt;
  for (double& v : pred.data) v = -4 * v + 10;
  CHECK(pearson(gt, pred) == doctest::Approx(-1.0));
  const MetricReport r = evaluate(pred, gt);
  CHECK(r.ssim == doctest::Approx(1.0));
  CHECK(r.mse < 1e-20);
  const MetricReport raw = evaluate(pred, gt, false, false);
  CHECK(raw.ssim < 0.5);
  const MetricReport eq = evaluate(pred, gt, true, true);
  CHECK(eq.ssim == doctest::Approx(1.0));
}

}
