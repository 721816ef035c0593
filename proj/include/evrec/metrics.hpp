#pragma once

#include "evrec/image.hpp"

namespace evrec {

double mse(const Image& a, const Image& b);

/// Mean local SSIM over the valid region of an 11x11 Gaussian window
/// (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range 1. Images need at least
/// 11x11 pixels.
double ssim(const Image& a, const Image& b);

/// 256-bin histogram over [min, max] mapped through its cumulative
/// distribution to [0, 1]. A constant image maps to all zeros.
Image hist_equalize(const Image& img);

struct AffineFit {
  double alpha = 0.0;
  double beta = 0.0;
  bool degenerate = false;  // constant prediction: alpha = 0, beta = mean(gt)
};

/// Least-squares alpha, beta minimizing |alpha pred + beta - gt|^2.
AffineFit fit_affine(const Image& pred, const Image& gt);
Image align_mean_scale(const Image& pred, const Image& gt, AffineFit* fit = nullptr);

double pearson(const Image& a, const Image& b);

struct MetricReport {
  double mse = 0.0;
  double ssim = 0.0;
  AffineFit fit;
};

/// Evaluation protocol: affine-align pred to gt (unless `align` is false),
/// map both to [0, 1] with the range of gt, optionally histogram-equalize
/// both, then score.
MetricReport evaluate(const Image& pred, const Image& gt, bool equalize = false, bool align = true);

}  // namespace evrec
