#include "vcd/ringing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "vcd/color.hpp"
#include "vcd/log.hpp"

namespace vcd {

Mask complement(const Mask& mask) {
  Mask out(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = mask.data()[i] ? 0 : 1;
  return out;
}

std::size_t count_set(const Mask& mask) {
  return static_cast<std::size_t>(std::count(mask.values().begin(), mask.values().end(), 1));
}

void EdgeParams::validate() const {
  require(low >= 0.0 && low < high && high <= 1.0, ErrorKind::Precondition,
          "edge thresholds need 0 <= low < high <= 1");
  require(dilate_px >= 0, ErrorKind::Precondition, "dilation must be >= 0");
}

namespace {

inline int clamp_index(int i, int n) { return i < 0 ? -i - 1 : (i >= n ? 2 * n - 1 - i : i); }

Plane gradient_magnitude(const Plane& p, Plane& gx, Plane& gy) {
  const int w = p.width();
  const int h = p.height();
  Plane mag(w, h);
  gx = Plane(w, h);
  gy = Plane(w, h);
  auto at = [&](int x, int y) {
    return p(std::clamp(clamp_index(x, w), 0, w - 1), std::clamp(clamp_index(y, h), 0, h - 1));
  };
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
      const double dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
      gx(x, y) = dx;
      gy(x, y) = dy;
      mag(x, y) = std::hypot(dx, dy);
    }
  }
  return mag;
}

Mask dilate(const Mask& in, int radius) {
  if (radius == 0) return in;
  const int w = in.width();
  const int h = in.height();
  Mask horizontal(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int i = std::max(0, x - radius); i <= std::min(w - 1, x + radius) && !v; ++i) v = in(i, y);
      horizontal(x, y) = v;
    }
  }
  Mask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int j = std::max(0, y - radius); j <= std::min(h - 1, y + radius) && !v; ++j) {
        v = horizontal(x, j);
      }
      out(x, y) = v;
    }
  }
  return out;
}

// Background regions not reachable from the border are enclosed by edges.
void fill_holes(Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Grid<std::uint8_t> outside(w, h);
  std::deque<std::pair<int, int>> queue;
  auto seed = [&](int x, int y) {
    if (!mask(x, y) && !outside(x, y)) {
      outside(x, y) = 1;
      queue.emplace_back(x, y);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    if (x > 0) seed(x - 1, y);
    if (x + 1 < w) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < h) seed(x, y + 1);
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.data()[i] && !outside.data()[i]) mask.data()[i] = 1;
  }
}

}  // namespace

Mask edge_mask(const Plane& blurred, const EdgeParams& params) {
  params.validate();
  const int w = blurred.width();
  const int h = blurred.height();
  Mask out(w, h);
  if (blurred.empty()) return out;

  Plane gx, gy;
  const Plane mag = gradient_magnitude(blurred, gx, gy);
  const double peak = *std::max_element(mag.values().begin(), mag.values().end());
  if (!(peak > 1e-12)) return out;

  // Non-maximum suppression along the quantized gradient direction. Ties go
  // to the pixel on the positive side so a one-pixel step keeps one column.
  Plane thin(w, h);
  auto m = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : mag(x, y); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = mag(x, y);
      if (v <= 0.0) continue;
      double angle = std::atan2(gy(x, y), gx(x, y)) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      int dx, dy;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1; dy = 0;
      } else if (angle < 67.5) {
        dx = 1; dy = 1;
      } else if (angle < 112.5) {
        dx = 0; dy = 1;
      } else {
        dx = -1; dy = 1;
      }
      if (v >= m(x - dx, y - dy) && v > m(x + dx, y + dy)) thin(x, y) = v / peak;
    }
  }

  // Hysteresis: weak pixels survive when 8-connected to a strong one.
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (thin(x, y) >= params.high) {
        out(x, y) = 1;
        queue.emplace_back(x, y);
      }
    }
  }
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int j = -1; j <= 1; ++j) {
      for (int i = -1; i <= 1; ++i) {
        const int nx = x + i;
        const int ny = y + j;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || out(nx, ny)) continue;
        if (thin(nx, ny) >= params.low) {
          out(nx, ny) = 1;
          queue.emplace_back(nx, ny);
        }
      }
    }
  }

  out = dilate(out, params.dilate_px);
  fill_holes(out);
  return out;
}

Mask edge_mask(const RasterImage& blurred, const EdgeParams& params) {
  return edge_mask(luma(blurred), params);
}

Plane composite(const Plane& original, const Plane& deconvolved, const Mask& mask) {
  require(original.same_shape(deconvolved) && original.width() == mask.width() &&
              original.height() == mask.height(),
          ErrorKind::DimensionMismatch, "composite: dimensions differ");
  Plane out(original.width(), original.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = mask.data()[i] ? deconvolved.data()[i] : original.data()[i];
  }
  return out;
}

RasterImage composite(const RasterImage& original, const RasterImage& deconvolved, const Mask& mask) {
  require_same_shape(original, deconvolved, "composite");
  require(original.colorspace() == deconvolved.colorspace(), ErrorKind::DimensionMismatch,
          "composite: color spaces differ");
  std::vector<Plane> planes;
  for (int c = 0; c < original.channels(); ++c) {
    planes.push_back(composite(original.plane(c), deconvolved.plane(c), mask));
  }
  return RasterImage::from_planes(original.colorspace(), std::move(planes));
}

std::vector<Segment> segment_mask(const Mask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Grid<std::uint8_t> seen(w, h);
  std::vector<Segment> segments;
  std::deque<std::pair<int, int>> queue;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!mask(x0, y0) || seen(x0, y0)) continue;
      Segment s;
      int x_min = x0, x_max = x0, y_min = y0, y_max = y0;
      seen(x0, y0) = 1;
      queue.emplace_back(x0, y0);
      while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        s.pixels.push_back(static_cast<std::size_t>(y) * w + x);
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
        for (int j = -1; j <= 1; ++j) {
          for (int i = -1; i <= 1; ++i) {
            const int nx = x + i;
            const int ny = y + j;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (mask(nx, ny) && !seen(nx, ny)) {
              seen(nx, ny) = 1;
              queue.emplace_back(nx, ny);
            }
          }
        }
      }
      std::sort(s.pixels.begin(), s.pixels.end());
      s.box = {x_min, y_min, x_max - x_min + 1, y_max - y_min + 1};
      segments.push_back(std::move(s));
    }
  }
  return segments;
}

SegmentPrecorrectResult segment_precorrect_detailed(const RasterImage& image, const Kernel& kernel,
                                                    const WienerParams& params,
                                                    TextDetector& detector,
                                                    const EdgeParams& edges,
                                                    const PrecorrectOptions& options) {
  params.validate();
  require(!image.empty(), ErrorKind::Precondition, "image is empty");

  RasterImage yuv;
  const Plane* work = nullptr;
  switch (image.colorspace()) {
    case ColorSpace::Gray:
    case ColorSpace::Yuv:
      work = &image.plane(0);
      break;
    case ColorSpace::Rgb:
      yuv = rgb_to_yuv(image);
      work = &yuv.plane(0);
      break;
  }

  SegmentPrecorrectResult result;
  result.mask = edge_mask(convolve_plane(*work, kernel), edges);
  result.segments = segment_mask(result.mask);

  bool any_text = false;
  for (auto& s : result.segments) {
    try {
      s.has_text = !detector.detect(crop(image, s.box.x, s.box.y, s.box.width, s.box.height)).empty();
    } catch (const std::exception& e) {
      ++result.detector_failures;
      s.has_text = false;
      log::warn(std::string("text detector failed on a segment, using baseline rho: ") + e.what());
    }
    any_text = any_text || s.has_text;
  }

  auto deconvolve_at = [&](double rho) {
    const Deconvolver d(kernel, rho, params.spectrum_floor);
    Plane raw = options.tiles ? d.apply_tiled(*work, *options.tiles) : d.apply(*work);
    return normalize_range(std::move(raw), options.range);
  };
  const Plane base = result.segments.empty() ? Plane{} : deconvolve_at(params.rho);
  const Plane text = any_text ? deconvolve_at(params.rho_text) : Plane{};

  Plane out = *work;
  for (const auto& s : result.segments) {
    const Plane& src = s.has_text ? text : base;
    for (std::size_t i : s.pixels) out.data()[i] = src.data()[i];
  }

  switch (image.colorspace()) {
    case ColorSpace::Gray:
      result.image = RasterImage::gray(std::move(out));
      break;
    case ColorSpace::Yuv:
      result.image = RasterImage::from_planes(ColorSpace::Yuv,
                                              {std::move(out), image.plane(1), image.plane(2)});
      break;
    case ColorSpace::Rgb: {
      // Pixels outside the mask come straight from the input so that the
      // YUV round trip cannot perturb them.
      const RasterImage converted = yuv_to_rgb(
          RasterImage::from_planes(ColorSpace::Yuv, {std::move(out), yuv.plane(1), yuv.plane(2)}));
      result.image = composite(image, converted, result.mask);
      break;
    }
  }
  return result;
}

RasterImage segment_precorrect(const RasterImage& image, const Kernel& kernel,
                               const WienerParams& params, TextDetector& detector,
                               const EdgeParams& edges, const PrecorrectOptions& options) {
  return segment_precorrect_detailed(image, kernel, params, detector, edges, options).image;
}

}  // namespace vcd
