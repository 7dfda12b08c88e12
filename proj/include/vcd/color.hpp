#pragma once

#include "vcd/image.hpp"

namespace vcd {

// BT.601 full range with chroma offset by one half:
//   Y = 0.299 R + 0.587 G + 0.114 B
//   U = 0.5 + (B - Y) / 1.772
//   V = 0.5 + (R - Y) / 1.402

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

RasterImage rgb_to_yuv(const RasterImage& rgb);
RasterImage yuv_to_rgb(const RasterImage& yuv);

/// Luma plane of any image: the plane itself for gray, Y for YUV, the BT.601
/// weighted sum for RGB.
Plane luma(const RasterImage& image);

/// Replicates a gray image into three identical RGB planes.
RasterImage gray_to_rgb(const RasterImage& gray);

}  // namespace vcd
