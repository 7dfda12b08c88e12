#pragma once

#include <iosfwd>

#include "vcd/image.hpp"

namespace vcd {

/// A discretized point spread function: odd dimensions, non-negative
/// entries, unit sum. The center texel is (width/2, height/2).
class Kernel {
 public:
  /// Validates shape and sign, then divides by the sum.
  static Kernel normalized(Plane values);
  static Kernel delta(int size = 1);

  int width() const noexcept { return values_.width(); }
  int height() const noexcept { return values_.height(); }
  int radius_x() const noexcept { return width() / 2; }
  int radius_y() const noexcept { return height() / 2; }
  int radius() const noexcept { return std::max(radius_x(), radius_y()); }

  double operator()(int x, int y) const noexcept { return values_(x, y); }
  const Plane& values() const noexcept { return values_; }
  double max_value() const noexcept;
  double sum() const noexcept;

  /// True when all mass sits on the center texel.
  bool is_delta() const noexcept;

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  explicit Kernel(Plane values) : values_(std::move(values)) {}
  Plane values_;
};

/// Plain-text grid: "width height" header, then one row of decimals per line.
void write_kernel_text(std::ostream& out, const Kernel& kernel);
Kernel read_kernel_text(std::istream& in);

/// Grayscale view of a kernel scaled so its maximum maps to 1.
RasterImage kernel_preview(const Kernel& kernel);

}  // namespace vcd
