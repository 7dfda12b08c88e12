#include "vcd/kernel.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace vcd {

Kernel Kernel::normalized(Plane values) {
  require(!values.empty(), ErrorKind::Sizing, "kernel must not be empty");
  require(values.width() % 2 == 1 && values.height() % 2 == 1, ErrorKind::Sizing,
          "kernel dimensions must be odd");
  double total = 0.0;
  for (double v : values.values()) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::Precondition,
            "kernel entries must be finite and non-negative");
    total += v;
  }
  require(total > 0.0, ErrorKind::Precondition, "kernel has no mass");
  for (double& v : values.values()) v /= total;
  return Kernel(std::move(values));
}

Kernel Kernel::delta(int size) {
  require(size >= 1 && size % 2 == 1, ErrorKind::Sizing, "delta kernel size must be odd");
  Plane p(size, size);
  p(size / 2, size / 2) = 1.0;
  return Kernel(std::move(p));
}

double Kernel::max_value() const noexcept {
  auto v = values_.values();
  return *std::max_element(v.begin(), v.end());
}

double Kernel::sum() const noexcept {
  auto v = values_.values();
  return std::accumulate(v.begin(), v.end(), 0.0);
}

bool Kernel::is_delta() const noexcept {
  const int cx = radius_x();
  const int cy = radius_y();
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      if ((x != cx || y != cy) && values_(x, y) != 0.0) return false;
    }
  }
  return values_(cx, cy) == 1.0;
}

void write_kernel_text(std::ostream& out, const Kernel& kernel) {
  out << kernel.width() << ' ' << kernel.height() << '\n';
  out << std::setprecision(17);
  for (int y = 0; y < kernel.height(); ++y) {
    for (int x = 0; x < kernel.width(); ++x) {
      if (x) out << ' ';
      out << kernel(x, y);
    }
    out << '\n';
  }
}

Kernel read_kernel_text(std::istream& in) {
  int w = 0;
  int h = 0;
  require(static_cast<bool>(in >> w >> h), ErrorKind::Io, "kernel text: missing header");
  require(w > 0 && h > 0, ErrorKind::Io, "kernel text: bad dimensions");
  Plane p(w, h);
  for (double& v : p.values()) {
    require(static_cast<bool>(in >> v), ErrorKind::Io, "kernel text: truncated grid");
  }
  return Kernel::normalized(std::move(p));
}

RasterImage kernel_preview(const Kernel& kernel) {
  Plane p = kernel.values();
  const double peak = kernel.max_value();
  if (peak > 0.0) {
    for (double& v : p.values()) v /= peak;
  }
  return RasterImage::gray(std::move(p));
}

}  // namespace vcd
