#include "vcd/reference.hpp"

namespace vcd::reference {
namespace {

int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace

Plane tiled_deconvolve_serial(const Plane& input, const Deconvolver& deconvolver,
                              const TileGrid& grid) {
  deconvolver.validate(grid);
  if (grid.tile_px >= input.width() && grid.tile_px >= input.height()) {
    return deconvolver.apply(input);
  }
  Plane out(input.width(), input.height());
  for (const TileRect& t : tile_layout(input.width(), input.height(), grid)) {
    const Plane result = deconvolver.apply(crop(input, t.src_x, t.src_y, t.src_w, t.src_h));
    for (int y = 0; y < t.core_h; ++y) {
      for (int x = 0; x < t.core_w; ++x) {
        out(t.core_x + x, t.core_y + y) = result(t.core_x - t.src_x + x, t.core_y - t.src_y + y);
      }
    }
  }
  return out;
}

Plane convolve_direct(const Plane& input, const Kernel& kernel) {
  const int rx = kernel.radius_x();
  const int ry = kernel.radius_y();
  Plane out(input.width(), input.height());
  for (int y = 0; y < input.height(); ++y) {
    for (int x = 0; x < input.width(); ++x) {
      double acc = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        for (int i = -rx; i <= rx; ++i) {
          acc += kernel(i + rx, j + ry) *
                 input(reflect(x - i, input.width()), reflect(y - j, input.height()));
        }
      }
      out(x, y) = acc;
    }
  }
  return out;
}

}  // namespace vcd::reference
