#include "vcd/precorrect.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vcd/color.hpp"

namespace vcd {

void WienerParams::validate() const {
  require(std::isfinite(rho) && rho >= 0.0, ErrorKind::Precondition, "rho must be >= 0");
  require(std::isfinite(rho_text) && rho_text >= rho, ErrorKind::Precondition,
          "rho_text must be >= rho");
  require(std::isfinite(spectrum_floor) && spectrum_floor > 0.0, ErrorKind::Precondition,
          "spectrum floor must be > 0");
}

namespace {

// Half-sample symmetric extension: ... b a | a b c ... c | c b ...
inline int reflect(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

Spectrum kernel_spectrum(const Kernel& kernel, int width, int height) {
  require(width >= kernel.width() && height >= kernel.height(), ErrorKind::Sizing,
          "kernel larger than the filtering canvas");
  fft::RealBuffer canvas(static_cast<std::size_t>(width) * height, 0.0);
  const int rx = kernel.radius_x();
  const int ry = kernel.radius_y();
  for (int y = 0; y < kernel.height(); ++y) {
    const int cy = (y - ry + height) % height;
    for (int x = 0; x < kernel.width(); ++x) {
      const int cx = (x - rx + width) % width;
      canvas[static_cast<std::size_t>(cy) * width + cx] = kernel(x, y);
    }
  }
  Spectrum s{width, height, fft::ComplexBuffer(static_cast<std::size_t>(fft::half_width(width)) * height)};
  fft::forward_real(canvas.data(), s.bins.data(), width, height);
  return s;
}

Spectrum wiener_ipsf(const Kernel& kernel, const WienerParams& params, int width, int height) {
  require(std::isfinite(params.rho) && params.rho >= 0.0, ErrorKind::Precondition, "rho must be >= 0");
  require(params.spectrum_floor > 0.0, ErrorKind::Precondition, "spectrum floor must be > 0");
  Spectrum s = kernel_spectrum(kernel, width, height);
  for (auto& k : s.bins) {
    const double power = std::norm(k);
    if (params.rho == 0.0 && std::sqrt(power) < params.spectrum_floor) {
      fail(ErrorKind::IllConditioned,
           "unregularized inverse: PSF spectrum falls below the floor; use rho > 0");
    }
    k = std::conj(k) / (power + params.rho);
  }
  return s;
}

Spectrum naive_inverse_ipsf(const Kernel& kernel, double eps, int width, int height) {
  require(std::isfinite(eps) && eps > 0.0, ErrorKind::Precondition, "eps must be > 0");
  Spectrum s = kernel_spectrum(kernel, width, height);
  for (auto& k : s.bins) {
    k = std::abs(k) >= eps ? 1.0 / k : std::complex<double>{0.0, 0.0};
  }
  return s;
}

Canvas filter_canvas(int width, int height, int pad) {
  require(width > 0 && height > 0, ErrorKind::Sizing, "cannot filter an empty plane");
  require(pad >= 0, ErrorKind::Sizing, "negative padding");
  return {pad, fft::next_fast_size(width + 2 * pad), fft::next_fast_size(height + 2 * pad)};
}

Plane apply_response(const Plane& input, const Spectrum& response, int pad) {
  const int w = input.width();
  const int h = input.height();
  const int cw = response.width;
  const int ch = response.height;
  require(cw >= w + 2 * pad && ch >= h + 2 * pad, ErrorKind::Sizing,
          "response canvas smaller than the padded plane");

  // Column sources for one canvas row; the middle run is a plain copy.
  std::vector<int> columns(static_cast<std::size_t>(cw));
  for (int i = 0; i < cw; ++i) columns[static_cast<std::size_t>(i)] = reflect(i - pad, w);
  const int run_end = std::min(cw, pad + w);

  fft::RealBuffer canvas(static_cast<std::size_t>(cw) * ch);
  for (int j = 0; j < ch; ++j) {
    const double* src = input.row(reflect(j - pad, h)).data();
    double* dst = canvas.data() + static_cast<std::size_t>(j) * cw;
    for (int i = 0; i < pad; ++i) dst[i] = src[columns[static_cast<std::size_t>(i)]];
    std::copy(src, src + (run_end - pad), dst + pad);
    for (int i = run_end; i < cw; ++i) dst[i] = src[columns[static_cast<std::size_t>(i)]];
  }

  fft::ComplexBuffer bins(response.bins.size());
  fft::forward_real(canvas.data(), bins.data(), cw, ch);
  // Written out: std::complex operator* takes a slow path guarding inf/nan.
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const double a = bins[i].real(), b = bins[i].imag();
    const double c = response.bins[i].real(), d = response.bins[i].imag();
    bins[i] = {a * c - b * d, a * d + b * c};
  }
  fft::inverse_real(bins.data(), canvas.data(), cw, ch);

  const double scale = 1.0 / (static_cast<double>(cw) * ch);
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    const double* src = canvas.data() + static_cast<std::size_t>(y + pad) * cw + pad;
    auto dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[static_cast<std::size_t>(x)] = src[x] * scale;
  }
  return out;
}

Plane convolve_plane(const Plane& input, const Kernel& kernel) {
  require(!input.empty(), ErrorKind::Precondition, "cannot convolve an empty plane");
  const Canvas c = filter_canvas(input.width(), input.height(), kernel.radius());
  require(c.width >= kernel.width() && c.height >= kernel.height(), ErrorKind::Sizing,
          "kernel larger than the padded image");
  return apply_response(input, kernel_spectrum(kernel, c.width, c.height), c.pad);
}

RasterImage convolve(const RasterImage& image, const Kernel& kernel) {
  require(!image.empty(), ErrorKind::Precondition, "cannot convolve an empty image");
  std::vector<Plane> planes;
  planes.reserve(image.planes().size());
  for (const auto& p : image.planes()) planes.push_back(convolve_plane(p, kernel));
  return RasterImage::from_planes(image.colorspace(), std::move(planes));
}

Plane normalize_range(Plane plane, RangePolicy policy) {
  if (policy == RangePolicy::AffineRemap && !plane.empty()) {
    const auto v = plane.values();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if ((lo < 0.0 || hi > 1.0) && hi > lo) {
      const double scale = 1.0 / (hi - lo);
      for (double& x : plane.values()) x = (x - lo) * scale;
    }
  }
  clamp_unit(plane);
  return plane;
}

Deconvolver::Deconvolver(Kernel kernel, double rho, double spectrum_floor, InverseKind kind)
    : kernel_(std::move(kernel)), rho_(rho), spectrum_floor_(spectrum_floor), kind_(kind) {
  require(std::isfinite(rho_) && rho_ >= 0.0, ErrorKind::Precondition, "rho must be >= 0");
  require(std::isfinite(spectrum_floor_) && spectrum_floor_ > 0.0, ErrorKind::Precondition,
          "spectrum floor must be > 0");
}

std::shared_ptr<const Spectrum> Deconvolver::response(int width, int height) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = responses_.find({width, height}); it != responses_.end()) return it->second;
  }
  auto built = std::make_shared<const Spectrum>(
      kind_ == InverseKind::Wiener
          ? wiener_ipsf(kernel_, WienerParams{rho_, rho_, spectrum_floor_}, width, height)
          : naive_inverse_ipsf(kernel_, spectrum_floor_, width, height));
  std::lock_guard lock(mutex_);
  return responses_.try_emplace({width, height}, std::move(built)).first->second;
}

Plane Deconvolver::apply(const Plane& input) const {
  require(!input.empty(), ErrorKind::Precondition, "cannot deconvolve an empty plane");
  const Canvas c = filter_canvas(input.width(), input.height(), pad());
  return apply_response(input, *response(c.width, c.height), c.pad);
}

void Deconvolver::validate(const TileGrid& grid) const {
  require(grid.tile_px >= 32, ErrorKind::Precondition, "tiles must be at least 32 px");
  require(grid.pad_px >= kernel_.radius(), ErrorKind::Precondition,
          "tile padding " + std::to_string(grid.pad_px) + " px is below the kernel radius " +
              std::to_string(kernel_.radius()) + " px; seams would show");
}

std::vector<TileRect> tile_layout(int width, int height, const TileGrid& grid) {
  std::vector<TileRect> tiles;
  for (int y = 0; y < height; y += grid.tile_px) {
    for (int x = 0; x < width; x += grid.tile_px) {
      TileRect t{};
      t.core_x = x;
      t.core_y = y;
      t.core_w = std::min(grid.tile_px, width - x);
      t.core_h = std::min(grid.tile_px, height - y);
      t.src_x = std::max(0, x - grid.pad_px);
      t.src_y = std::max(0, y - grid.pad_px);
      t.src_w = std::min(width, x + t.core_w + grid.pad_px) - t.src_x;
      t.src_h = std::min(height, y + t.core_h + grid.pad_px) - t.src_y;
      tiles.push_back(t);
    }
  }
  return tiles;
}

Plane Deconvolver::apply_tiled(const Plane& input, const TileGrid& grid) const {
  validate(grid);
  require(!input.empty(), ErrorKind::Precondition, "cannot deconvolve an empty plane");
  if (grid.tile_px >= input.width() && grid.tile_px >= input.height()) return apply(input);

  const auto tiles = tile_layout(input.width(), input.height(), grid);
  Plane out(input.width(), input.height());
  const long long count = static_cast<long long>(tiles.size());
  // Tiles write disjoint cores, so the result does not depend on scheduling.
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    const TileRect& t = tiles[static_cast<std::size_t>(i)];
    const Plane result = apply(crop(input, t.src_x, t.src_y, t.src_w, t.src_h));
    const int ox = t.core_x - t.src_x;
    const int oy = t.core_y - t.src_y;
    for (int y = 0; y < t.core_h; ++y) {
      auto src = result.row(oy + y).subspan(static_cast<std::size_t>(ox),
                                            static_cast<std::size_t>(t.core_w));
      std::copy(src.begin(), src.end(), out.row(t.core_y + y).begin() + t.core_x);
    }
  }
  return out;
}

Plane deconvolve_raw(const Plane& input, const Kernel& kernel, const WienerParams& params) {
  return Deconvolver(kernel, params.rho, params.spectrum_floor).apply(input);
}

namespace {

void require_gray(const RasterImage& image) {
  require(image.colorspace() == ColorSpace::Gray, ErrorKind::Precondition,
          "expected a single-channel image");
  require(!image.empty(), ErrorKind::Precondition, "image is empty");
}

}  // namespace

RasterImage deconvolve(const RasterImage& gray, const Kernel& kernel, const WienerParams& params,
                       RangePolicy range) {
  require_gray(gray);
  return RasterImage::gray(normalize_range(deconvolve_raw(gray.plane(0), kernel, params), range));
}

Plane tiled_deconvolve_raw(const Plane& input, const Kernel& kernel, const WienerParams& params,
                           const TileGrid& grid) {
  return Deconvolver(kernel, params.rho, params.spectrum_floor).apply_tiled(input, grid);
}

RasterImage tiled_deconvolve(const RasterImage& gray, const Kernel& kernel,
                             const WienerParams& params, const TileGrid& grid, RangePolicy range) {
  require_gray(gray);
  return RasterImage::gray(
      normalize_range(tiled_deconvolve_raw(gray.plane(0), kernel, params, grid), range));
}

namespace {

Plane deconvolve_with(const Plane& plane, const Deconvolver& d, const PrecorrectOptions& options) {
  Plane raw = options.tiles ? d.apply_tiled(plane, *options.tiles) : d.apply(plane);
  return normalize_range(std::move(raw), options.range);
}

}  // namespace

RasterImage precorrect_yuv(const RasterImage& yuv, const Deconvolver& deconvolver,
                           const PrecorrectOptions& options) {
  require(yuv.colorspace() == ColorSpace::Yuv, ErrorKind::Precondition, "expected a YUV image");
  if (deconvolver.kernel().is_delta()) return yuv;
  return RasterImage::from_planes(
      ColorSpace::Yuv,
      {deconvolve_with(yuv.plane(0), deconvolver, options), yuv.plane(1), yuv.plane(2)});
}

RasterImage precorrect_color(const RasterImage& rgb, const Deconvolver& deconvolver,
                             const PrecorrectOptions& options) {
  require(rgb.colorspace() == ColorSpace::Rgb, ErrorKind::Precondition, "expected an RGB image");
  if (deconvolver.kernel().is_delta()) return rgb;
  return yuv_to_rgb(precorrect_yuv(rgb_to_yuv(rgb), deconvolver, options));
}

RasterImage precorrect_color(const RasterImage& rgb, const Kernel& kernel,
                             const WienerParams& params, const PrecorrectOptions& options) {
  params.validate();
  return precorrect_color(rgb, Deconvolver(kernel, params.rho, params.spectrum_floor), options);
}

RasterImage precorrect(const RasterImage& image, const Deconvolver& deconvolver,
                       const PrecorrectOptions& options) {
  switch (image.colorspace()) {
    case ColorSpace::Gray:
      if (deconvolver.kernel().is_delta()) return image;
      return RasterImage::gray(deconvolve_with(image.plane(0), deconvolver, options));
    case ColorSpace::Rgb:
      return precorrect_color(image, deconvolver, options);
    case ColorSpace::Yuv:
      return precorrect_yuv(image, deconvolver, options);
  }
  return image;
}

}  // namespace vcd
