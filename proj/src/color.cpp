#include "vcd/color.hpp"

namespace vcd {
namespace {

constexpr double kR = kLumaR;
constexpr double kG = kLumaG;
constexpr double kB = kLumaB;
constexpr double kU = 1.772;  // 2 (1 - kB)
constexpr double kV = 1.402;  // 2 (1 - kR)

}  // namespace

RasterImage rgb_to_yuv(const RasterImage& rgb) {
  require(rgb.colorspace() == ColorSpace::Rgb, ErrorKind::Precondition, "expected an RGB image");
  const int w = rgb.width();
  const int h = rgb.height();
  Plane y(w, h), u(w, h), v(w, h);
  const auto r = rgb.plane(0).values();
  const auto g = rgb.plane(1).values();
  const auto b = rgb.plane(2).values();
  const long long n = static_cast<long long>(r.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const double luma = kR * r[i] + kG * g[i] + kB * b[i];
    y.data()[i] = luma;
    u.data()[i] = 0.5 + (b[i] - luma) / kU;
    v.data()[i] = 0.5 + (r[i] - luma) / kV;
  }
  std::vector<Plane> planes;
  planes.reserve(3);
  planes.push_back(std::move(y));
  planes.push_back(std::move(u));
  planes.push_back(std::move(v));
  return RasterImage::from_planes(ColorSpace::Yuv, std::move(planes));
}

RasterImage yuv_to_rgb(const RasterImage& yuv) {
  require(yuv.colorspace() == ColorSpace::Yuv, ErrorKind::Precondition, "expected a YUV image");
  const int w = yuv.width();
  const int h = yuv.height();
  Plane r(w, h), g(w, h), b(w, h);
  const auto y = yuv.plane(0).values();
  const auto u = yuv.plane(1).values();
  const auto v = yuv.plane(2).values();
  const long long n = static_cast<long long>(y.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const double rr = y[i] + kV * (v[i] - 0.5);
    const double bb = y[i] + kU * (u[i] - 0.5);
    r.data()[i] = rr;
    b.data()[i] = bb;
    g.data()[i] = (y[i] - kR * rr - kB * bb) / kG;
  }
  std::vector<Plane> planes;
  planes.reserve(3);
  planes.push_back(std::move(r));
  planes.push_back(std::move(g));
  planes.push_back(std::move(b));
  return RasterImage::from_planes(ColorSpace::Rgb, std::move(planes));
}

Plane luma(const RasterImage& image) {
  switch (image.colorspace()) {
    case ColorSpace::Gray:
    case ColorSpace::Yuv:
      return image.plane(0);
    case ColorSpace::Rgb: {
      Plane y(image.width(), image.height());
      const auto r = image.plane(0).values();
      const auto g = image.plane(1).values();
      const auto b = image.plane(2).values();
      for (std::size_t i = 0; i < r.size(); ++i) y.data()[i] = kR * r[i] + kG * g[i] + kB * b[i];
      return y;
    }
  }
  return {};
}

RasterImage gray_to_rgb(const RasterImage& gray) {
  require(gray.colorspace() == ColorSpace::Gray, ErrorKind::Precondition, "expected a gray image");
  return RasterImage::from_planes(ColorSpace::Rgb, {gray.plane(0), gray.plane(0), gray.plane(0)});
}

}  // namespace vcd
