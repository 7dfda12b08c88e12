#pragma once

#include <limits>
#include <string>
#include <vector>

#include "vcd/image.hpp"

namespace vcd {

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

struct PsnrResult {
  /// One value per channel of the inputs.
  std::vector<double> channels;
  /// Computed on luma; equals channels[0] for gray images.
  double combined = 0.0;
};

/// 10 log10(max(a)^2 / MSE) with the peak taken from the first argument
/// (1.0 when `a` is all black). Identical planes give +inf.
double psnr(const Plane& a, const Plane& b);
PsnrResult psnr(const RasterImage& a, const RasterImage& b);

/// Root mean squared error on luma.
double rmse(const RasterImage& a, const RasterImage& b);

struct AbsoluteError {
  /// |m(a) - m(b)| where m is the luma (monochrome) filter.
  Plane map;
  double total = 0.0;
  /// Total over the summed luma intensity of `a`, in percent.
  double percent = 0.0;
  /// Per-channel totals of |a - b| before the monochrome filter.
  std::vector<double> channel_totals;
};

AbsoluteError absolute_error(const RasterImage& a, const RasterImage& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double c1 = 1e-4;  // (0.01 L)^2, L = 1
  double c2 = 9e-4;  // (0.03 L)^2

  void validate() const;
};

/// Mean SSIM over every full Gaussian-weighted window. Planes smaller than
/// the window are compared as one uniform global window.
double ssim(const Plane& a, const Plane& b, const SsimParams& params = {});
/// SSIM of the luma planes.
double ssim(const RasterImage& a, const RasterImage& b, const SsimParams& params = {});

/// Pearson correlation of the pixel vectors; throws UndefinedCorrelation when
/// either input is constant.
double ncc(const Plane& a, const Plane& b);
double ncc(const RasterImage& a, const RasterImage& b);

/// White where the luma differs by more than `threshold`.
RasterImage diff_map(const RasterImage& a, const RasterImage& b, double threshold);

/// (max - min) / (max + min) of the luma; 0 for an all-black image.
double michelson_contrast(const RasterImage& image);

struct MetricsReport {
  double psnr_r = 0.0;
  double psnr_g = 0.0;
  double psnr_b = 0.0;
  double psnr_y = 0.0;
  double rmse = 0.0;
  double ae_total = 0.0;
  double ae_percent = 0.0;
  double ncc = 0.0;
  double ssim = 0.0;
  /// Michelson contrast of the test image over that of the reference.
  double contrast_ratio = 0.0;

  /// Infinite PSNR is written as the string "inf", NaN as null.
  std::string to_json() const;
  /// One `key=value` per line.
  std::string to_key_value() const;
};

/// Compares `test` against `reference`. Gray inputs report the same PSNR in
/// every channel slot. NCC is NaN (null in JSON) when either luma plane is
/// constant; the contrast ratio is NaN when the reference has no contrast.
MetricsReport compare(const RasterImage& reference, const RasterImage& test);

}  // namespace vcd
