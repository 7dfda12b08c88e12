#pragma once

// Brute-force reimplementations used as test oracles. They follow the
// textbook formulas with plain loops and share no code with the library.

#include "vcd/image.hpp"
#include "vcd/kernel.hpp"

namespace vcd::testing {

/// Coverage of a disk of `radius` centered on the middle texel, estimated on
/// an ss x ss grid per pixel, normalized to unit sum.
Plane supersampled_disk(double radius, int size, int ss = 16);

/// out(x,y) = sum_ij k(i,j) in(x-i, y-j), borders mirrored half-sample.
Plane convolve_oracle(const Plane& in, const Kernel& k);

double mse_oracle(const Plane& a, const Plane& b);
/// Peak from max(a), 1 when a is all zero; +inf when the planes agree.
double psnr_oracle(const Plane& a, const Plane& b);
double ae_total_oracle(const Plane& a, const Plane& b);
double ncc_oracle(const Plane& a, const Plane& b);
/// Windowed SSIM straight from its definition: 11x11 Gaussian (sigma 1.5)
/// weights, one window per valid position, mean of the local indices. Below
/// 11 px in either direction: a single uniform window over the whole image.
double ssim_oracle(const Plane& a, const Plane& b);

/// Second-moment ellipse of a non-negative grid: minor over major axis.
double axis_ratio(const Plane& p);

/// Sample at fractional coordinates with bilinear interpolation; zero
/// outside.
double bilinear(const Plane& p, double x, double y);

/// Catmull-Rom bicubic sample; zero outside.
double bicubic(const Plane& p, double x, double y);

/// Rotates about the center texel by `radians` with bicubic resampling.
Plane rotate(const Plane& p, double radians);

}  // namespace vcd::testing
