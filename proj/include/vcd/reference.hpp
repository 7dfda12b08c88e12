#pragma once

#include "vcd/image.hpp"
#include "vcd/kernel.hpp"
#include "vcd/precorrect.hpp"

// Serial reference implementations of the parallel kernels. They share no
// code path with the OpenMP versions beyond the per-tile transform and are
// kept for equivalence tests and the benchmark.
namespace vcd::reference {

/// Tile-by-tile deconvolution in a plain loop.
Plane tiled_deconvolve_serial(const Plane& input, const Deconvolver& deconvolver,
                              const TileGrid& grid);

/// Direct spatial convolution with symmetric reflection at the borders.
Plane convolve_direct(const Plane& input, const Kernel& kernel);

}  // namespace vcd::reference
