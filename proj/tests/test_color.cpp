#include <gtest/gtest.h>

#include <cmath>

#include "scenes.hpp"
#include "vcd/color.hpp"
#include "vcd/precorrect.hpp"
#include "vcd/psf.hpp"

namespace vcd {
namespace {

RasterImage solid(double r, double g, double b) {
  return RasterImage::from_planes(ColorSpace::Rgb, {Plane(2, 2, r), Plane(2, 2, g), Plane(2, 2, b)});
}

TEST(Yuv, WhiteAndBlack) {
  const RasterImage w = rgb_to_yuv(solid(1, 1, 1));
  EXPECT_NEAR(w.plane(0)(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(w.plane(1)(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(w.plane(2)(0, 0), 0.5, 1e-12);
  const RasterImage k = rgb_to_yuv(solid(0, 0, 0));
  EXPECT_EQ(k.plane(0)(0, 0), 0.0);
  EXPECT_NEAR(k.plane(1)(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(k.plane(2)(0, 0), 0.5, 1e-12);
}

TEST(Yuv, RoundTrip) {
  const RasterImage rgb = testing::random_rgb(64, 48, 11);
  const RasterImage back = yuv_to_rgb(rgb_to_yuv(rgb));
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < rgb.plane(c).size(); ++i) {
      EXPECT_NEAR(back.plane(c).data()[i], rgb.plane(c).data()[i], 1e-6);
    }
  }
}

TEST(Yuv, WrongColorSpaceRejected) {
  EXPECT_THROW(rgb_to_yuv(RasterImage::gray(Plane(2, 2, 0.5))), Error);
  EXPECT_THROW(yuv_to_rgb(solid(0.1, 0.2, 0.3)), Error);
}

TEST(Precorrect, ChromaPlanesUntouched) {
  const Deconvolver d(disk_psf(4.0, 9), 0.01, 1e-3);
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    const RasterImage yuv = rgb_to_yuv(testing::random_rgb(48, 40, 50 + seed));
    const RasterImage out = precorrect_yuv(yuv, d);
    EXPECT_TRUE(out.plane(1) == yuv.plane(1));
    EXPECT_TRUE(out.plane(2) == yuv.plane(2));
    EXPECT_FALSE(out.plane(0) == yuv.plane(0));
  }
}

TEST(Precorrect, GrayContentMatchesSingleChannel) {
  const Plane g = testing::band_limited_scene(96, 80, 2);
  const Kernel k = disk_psf(4.0, 9);
  const WienerParams params{0.005, 0.005, 1e-3};
  const RasterImage color = precorrect_color(gray_to_rgb(RasterImage::gray(g)), k, params);
  const RasterImage mono = deconvolve(RasterImage::gray(g), k, params);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(color.plane(c).data()[i], mono.plane(0).data()[i], 1e-6);
    }
  }
}

TEST(Precorrect, DeltaKernelReturnsInput) {
  const RasterImage rgb = testing::random_rgb(20, 20, 3);
  EXPECT_EQ(precorrect_color(rgb, Kernel::delta(5), WienerParams{}), rgb);
}

double hue(double r, double g, double b) {
  return std::atan2(std::sqrt(3.0) * (g - b), 2.0 * r - g - b);
}

TEST(Precorrect, LumaPathShiftsHueLessThanPerChannel) {
  // Saturated patches in a 4x3 grid.
  const double chart[12][3] = {{0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.1, 0.1, 0.9},
                               {0.9, 0.9, 0.1}, {0.1, 0.9, 0.9}, {0.9, 0.1, 0.9},
                               {0.9, 0.5, 0.1}, {0.5, 0.1, 0.9}, {0.1, 0.5, 0.9},
                               {0.6, 0.9, 0.2}, {0.9, 0.2, 0.5}, {0.3, 0.6, 0.3}};
  const int cell = 32;
  Plane r(4 * cell, 3 * cell), g(4 * cell, 3 * cell), b(4 * cell, 3 * cell);
  for (int y = 0; y < 3 * cell; ++y) {
    for (int x = 0; x < 4 * cell; ++x) {
      const auto& c = chart[(y / cell) * 4 + x / cell];
      r(x, y) = c[0];
      g(x, y) = c[1];
      b(x, y) = c[2];
    }
  }
  const RasterImage rgb = RasterImage::from_planes(ColorSpace::Rgb, {r, g, b});
  const Kernel k = disk_psf(4.0, 9);
  const WienerParams params{0.005, 0.005, 1e-3};

  const RasterImage luma_path = precorrect_color(rgb, k, params);
  std::vector<Plane> per_channel;
  for (int c = 0; c < 3; ++c) per_channel.push_back(deconvolve(RasterImage::gray(rgb.plane(c)), k, params).plane(0));
  const RasterImage rgb_path = RasterImage::from_planes(ColorSpace::Rgb, std::move(per_channel));

  auto mean_hue_shift = [&](const RasterImage& out) {
    double total = 0.0;
    for (int y = 0; y < rgb.height(); ++y) {
      for (int x = 0; x < rgb.width(); ++x) {
        const double h0 = hue(r(x, y), g(x, y), b(x, y));
        const double h1 = hue(out.plane(0)(x, y), out.plane(1)(x, y), out.plane(2)(x, y));
        total += std::abs(std::remainder(h1 - h0, 2.0 * M_PI));
      }
    }
    return total / (rgb.width() * rgb.height());
  };
  EXPECT_LT(mean_hue_shift(luma_path), mean_hue_shift(rgb_path));
}

}  // namespace
}  // namespace vcd
