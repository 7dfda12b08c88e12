#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>

#include "vcd/fft.hpp"
#include "vcd/image.hpp"
#include "vcd/kernel.hpp"

namespace vcd {

/// Regularization for inverse filtering. `rho` is the baseline noise-to-signal
/// constant, `rho_text` the stronger one used on text-bearing segments, and
/// `spectrum_floor` the magnitude below which a PSF frequency counts as lost.
struct WienerParams {
  double rho = 0.01;
  double rho_text = 0.05;
  double spectrum_floor = 1e-3;

  void validate() const;
};

/// What to do with deconvolved values outside [0,1].
enum class RangePolicy {
  Clamp,
  /// Stretch [min,max] onto [0,1] when the range overflows, else leave as is.
  AffineRemap,
};

struct TileGrid {
  int tile_px = 256;
  int pad_px = 32;
};

/// Half spectrum of a real signal on a width x height canvas; bins are laid
/// out (width/2+1) per row, height rows.
struct Spectrum {
  int width = 0;
  int height = 0;
  fft::ComplexBuffer bins;

  int half_width() const noexcept { return fft::half_width(width); }
  std::complex<double> operator()(int u, int v) const noexcept {
    return bins[static_cast<std::size_t>(v) * half_width() + u];
  }
};

/// Transform of the kernel zero-padded to the canvas with its center texel at
/// the origin.
Spectrum kernel_spectrum(const Kernel& kernel, int width, int height);

/// conj(K) / (|K|^2 + rho).
Spectrum wiener_ipsf(const Kernel& kernel, const WienerParams& params, int width, int height);

/// 1/K where |K| >= eps, else 0. Kept for comparison against the Wiener filter.
Spectrum naive_inverse_ipsf(const Kernel& kernel, double eps, int width, int height);

/// Canvas used to filter a width x height plane with `pad` pixels of
/// symmetric reflection on every side, rounded up to 2,3,5-smooth sizes.
struct Canvas {
  int pad = 0;
  int width = 0;
  int height = 0;
};
Canvas filter_canvas(int width, int height, int pad);

/// Multiplies the reflect-padded input by `response` in the frequency domain
/// and crops back. The response must be built for `canvas`.
Plane apply_response(const Plane& input, const Spectrum& response, int pad);

Plane convolve_plane(const Plane& input, const Kernel& kernel);
/// Forward blur of every plane; output clamped.
RasterImage convolve(const RasterImage& image, const Kernel& kernel);

Plane normalize_range(Plane plane, RangePolicy policy);

enum class InverseKind { Wiener, Naive };

/// Inverse filter bound to one kernel. Responses are cached per canvas shape,
/// so repeated frames or same-sized tiles reuse them. Thread-safe.
class Deconvolver {
 public:
  Deconvolver(Kernel kernel, double rho, double spectrum_floor,
              InverseKind kind = InverseKind::Wiener);

  const Kernel& kernel() const noexcept { return kernel_; }
  double rho() const noexcept { return rho_; }
  /// Reflection padding applied around every plane handed to apply().
  int pad() const noexcept { return 2 * kernel_.radius() + 1; }

  /// Unclamped deconvolution of the whole plane.
  Plane apply(const Plane& input) const;

  /// Deconvolves overlapping tiles independently (in parallel) and stitches
  /// their cores. Falls back to apply() when one tile covers the plane.
  Plane apply_tiled(const Plane& input, const TileGrid& grid) const;

  void validate(const TileGrid& grid) const;

 private:
  std::shared_ptr<const Spectrum> response(int width, int height) const;

  Kernel kernel_;
  double rho_;
  double spectrum_floor_;
  InverseKind kind_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, int>, std::shared_ptr<const Spectrum>> responses_;
};

/// Rectangle of one tile: the core it owns and the padded region it reads.
struct TileRect {
  int core_x, core_y, core_w, core_h;
  int src_x, src_y, src_w, src_h;
};
std::vector<TileRect> tile_layout(int width, int height, const TileGrid& grid);

Plane deconvolve_raw(const Plane& input, const Kernel& kernel, const WienerParams& params);
RasterImage deconvolve(const RasterImage& gray, const Kernel& kernel, const WienerParams& params,
                       RangePolicy range = RangePolicy::Clamp);

Plane tiled_deconvolve_raw(const Plane& input, const Kernel& kernel, const WienerParams& params,
                           const TileGrid& grid);
RasterImage tiled_deconvolve(const RasterImage& gray, const Kernel& kernel,
                             const WienerParams& params, const TileGrid& grid,
                             RangePolicy range = RangePolicy::Clamp);

struct PrecorrectOptions {
  RangePolicy range = RangePolicy::Clamp;
  std::optional<TileGrid> tiles;
};

/// Deconvolves the luma plane only; U and V are copied through untouched.
/// A delta kernel (viewer in focus) returns the input unchanged.
RasterImage precorrect_yuv(const RasterImage& yuv, const Deconvolver& deconvolver,
                           const PrecorrectOptions& options = {});

RasterImage precorrect_color(const RasterImage& rgb, const Kernel& kernel,
                             const WienerParams& params, const PrecorrectOptions& options = {});
RasterImage precorrect_color(const RasterImage& rgb, const Deconvolver& deconvolver,
                             const PrecorrectOptions& options = {});

/// Dispatches on color space: gray images are deconvolved directly, RGB and
/// YUV through the luma path.
RasterImage precorrect(const RasterImage& image, const Deconvolver& deconvolver,
                       const PrecorrectOptions& options = {});

}  // namespace vcd
