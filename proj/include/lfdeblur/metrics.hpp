#pragma once

#include <string>
#include <vector>

#include "lfdeblur/image.hpp"
#include "lfdeblur/light_field.hpp"

namespace lfdeblur {

// All metrics assume a [0, 1] signal range (peak = 1). Degenerate inputs are
// flagged with NaN (or +inf for a perfect PSNR match), never a crash.

// Mean-squared-error based peak signal-to-noise ratio over any two
// same-shape arrays; +inf when they match exactly.
double psnr(const Tensor<double>& pred, const Tensor<double>& gt);
double psnr(const LightField& pred, const LightField& gt);

// Single-scale structural similarity on single-channel images: 11x11
// Gaussian window (sigma 1.5), valid windows only, stability constants
// (0.01)^2 and (0.03)^2. Inputs smaller than the window are an error.
double ssim_gray(const Image& pred, const Image& gt);

// Zero-mean normalized cross-correlation over flat arrays; NaN when either
// side is constant.
double ncc(const double* a, const double* b, int64_t n);
double ncc(const Tensor<double>& pred, const Tensor<double>& gt);

// Local mean-squared error on single-channel images: 20x20 windows at
// stride 10, each window fitted with a free non-negative scale on the
// prediction, residuals normalized by the summed ground-truth window
// variance. Invariant under global positive scaling of the prediction.
double lmse_gray(const Image& pred, const Image& gt);

struct ViewMetrics {
  double psnr = 0, ssim = 0, ncc = 0, lmse = 0;
};

// Per-view metrics averaged over the grid: PSNR/NCC on RGB, SSIM/LMSE on
// the luma channel.
ViewMetrics evaluate_pair(const LightField& pred, const LightField& gt);

struct SceneMetrics {
  std::string name;
  ViewMetrics metrics;
};

struct MetricReport {
  std::vector<SceneMetrics> scenes;
  ViewMetrics mean;
};

MetricReport make_report(std::vector<SceneMetrics> scenes);
std::string report_to_text(const MetricReport& report);
void save_report(const std::string& path, const MetricReport& report);

}  // namespace lfdeblur
