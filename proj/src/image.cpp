#include "vcd/image.hpp"

#include <string>

namespace vcd {

int channel_count(ColorSpace cs) noexcept { return cs == ColorSpace::Gray ? 1 : 3; }

const char* to_string(ColorSpace cs) noexcept {
  switch (cs) {
    case ColorSpace::Gray: return "gray";
    case ColorSpace::Rgb: return "rgb";
    case ColorSpace::Yuv: return "yuv";
  }
  return "unknown";
}

RasterImage::RasterImage(int width, int height, ColorSpace cs)
    : width_(width), height_(height), colorspace_(cs) {
  planes_.assign(static_cast<std::size_t>(channel_count(cs)), Plane(width, height));
}

RasterImage RasterImage::from_planes(ColorSpace cs, std::vector<Plane> planes) {
  require(static_cast<int>(planes.size()) == channel_count(cs), ErrorKind::DimensionMismatch,
          std::string("wrong plane count for ") + to_string(cs) + " image");
  for (const auto& p : planes) {
    require(p.same_shape(planes.front()), ErrorKind::DimensionMismatch,
            "image planes must share dimensions");
  }
  RasterImage img;
  img.width_ = planes.front().width();
  img.height_ = planes.front().height();
  img.colorspace_ = cs;
  img.planes_ = std::move(planes);
  for (auto& p : img.planes_) clamp_unit(p);
  return img;
}

void clamp_unit(Plane& plane) noexcept {
  for (double& v : plane.values()) v = std::clamp(v, 0.0, 1.0);
}

Plane crop(const Plane& plane, int x, int y, int w, int h) {
  require(x >= 0 && y >= 0 && w >= 0 && h >= 0 && x + w <= plane.width() &&
              y + h <= plane.height(),
          ErrorKind::Sizing, "crop rectangle outside the plane");
  Plane out(w, h);
  for (int r = 0; r < h; ++r) {
    auto src = plane.row(y + r).subspan(static_cast<std::size_t>(x), static_cast<std::size_t>(w));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

RasterImage crop(const RasterImage& image, int x, int y, int w, int h) {
  std::vector<Plane> planes;
  planes.reserve(image.planes().size());
  for (const auto& p : image.planes()) planes.push_back(crop(p, x, y, w, h));
  return RasterImage::from_planes(image.colorspace(), std::move(planes));
}

void require_same_shape(const RasterImage& a, const RasterImage& b, const char* what) {
  require(a.same_shape(b), ErrorKind::DimensionMismatch,
          std::string(what) + ": images differ in size or channel count");
}

}  // namespace vcd
