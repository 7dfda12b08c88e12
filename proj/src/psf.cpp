#include "vcd/psf.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vcd/fft.hpp"

namespace vcd {

OpticalSpec OpticalSpec::from_sphere_diopters(double sphere_diopters, double view_distance_m,
                                              double pupil_diameter_m, double pixel_pitch_m) {
  require(std::isfinite(sphere_diopters) && sphere_diopters != 0.0, ErrorKind::OpticalConfig,
          "sphere power must be non-zero to place a finite far point");
  OpticalSpec spec;
  spec.pupil_diameter_m = pupil_diameter_m;
  spec.view_distance_m = view_distance_m;
  spec.pixel_pitch_m = pixel_pitch_m;
  spec.focus_distance_m = 1.0 / std::abs(sphere_diopters);
  spec.validate();
  return spec;
}

void OpticalSpec::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(positive(pupil_diameter_m), ErrorKind::OpticalConfig, "pupil diameter must be > 0");
  require(positive(focal_length_m), ErrorKind::OpticalConfig, "focal length must be > 0");
  require(positive(eye_depth_m), ErrorKind::OpticalConfig, "eye depth must be > 0");
  require(positive(view_distance_m), ErrorKind::OpticalConfig, "view distance must be > 0");
  require(positive(pixel_pitch_m), ErrorKind::OpticalConfig, "pixel pitch must be > 0");
  if (focus_distance_m) {
    require(positive(*focus_distance_m), ErrorKind::OpticalConfig, "focus distance must be > 0");
  }
}

double OpticalSpec::focus_distance() const {
  validate();
  if (focus_distance_m) return *focus_distance_m;
  // 1/d_f + 1/d_e = 1/f
  const double inv = 1.0 / focal_length_m - 1.0 / eye_depth_m;
  const double d_f = 1.0 / inv;
  require(std::isfinite(d_f) && d_f > 0.0, ErrorKind::OpticalConfig,
          "thin-lens configuration places the focus plane at or behind the eye");
  return d_f;
}

BlurRadius blur_radius(const OpticalSpec& spec) {
  const double d_f = spec.focus_distance();
  BlurRadius r;
  r.meters = spec.pupil_diameter_m * std::abs(d_f - spec.view_distance_m) / d_f;
  r.pixels = r.meters / spec.pixel_pitch_m;
  return r;
}

int disk_kernel_size(double radius_px) {
  require(std::isfinite(radius_px) && radius_px >= 0.0, ErrorKind::Precondition,
          "radius must be finite and non-negative");
  return 2 * static_cast<int>(std::ceil(radius_px)) + 1;
}

Kernel disk_psf(double radius_px, int size) {
  require(std::isfinite(radius_px) && radius_px >= 0.0, ErrorKind::Precondition,
          "disk radius must be finite and non-negative");
  require(size > 0 && size % 2 == 1, ErrorKind::Sizing, "kernel size must be odd");
  require(size >= disk_kernel_size(radius_px), ErrorKind::Sizing,
          "kernel size " + std::to_string(size) + " too small for radius " +
              std::to_string(radius_px));

  constexpr int kSub = 16;
  const int c = size / 2;
  const double r2 = radius_px * radius_px;
  Plane p(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int inside = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        const double dy = (y - c) + (sy + 0.5) / kSub - 0.5;
        for (int sx = 0; sx < kSub; ++sx) {
          const double dx = (x - c) + (sx + 0.5) / kSub - 0.5;
          if (dx * dx + dy * dy <= r2) ++inside;
        }
      }
      p(x, y) = static_cast<double>(inside) / (kSub * kSub);
    }
  }
  // Radii below the subsample spacing cover no sample; that is a point.
  if (p(c, c) == 0.0) return Kernel::delta(size);
  return Kernel::normalized(std::move(p));
}

void ZernikeSpec::validate() const {
  for (const auto& t : terms) {
    require(t.n >= 0 && std::abs(t.m) <= t.n && (t.n - std::abs(t.m)) % 2 == 0,
            ErrorKind::Precondition,
            "invalid Zernike indices (n=" + std::to_string(t.n) + ", m=" + std::to_string(t.m) +
                ")");
    require(std::isfinite(t.weight_um), ErrorKind::Precondition, "Zernike weight not finite");
  }
  require(std::isfinite(wavelength_m) && wavelength_m > 0.0, ErrorKind::Precondition,
          "wavelength must be > 0");
  require(std::isfinite(pupil_radius_m) && pupil_radius_m > 0.0, ErrorKind::Precondition,
          "pupil radius must be > 0");
  require(grid_size >= 32, ErrorKind::Resolution, "Zernike grid needs at least 32 samples");
  require(oversampling >= 1.0 && grid_size / oversampling >= 8.0, ErrorKind::Resolution,
          "pupil must span at least 8 samples");
  require(energy_fraction > 0.0 && energy_fraction <= 1.0, ErrorKind::Precondition,
          "energy fraction must be in (0, 1]");
}

namespace {

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double radial(int n, int m, double rho) {
  double sum = 0.0;
  for (int k = 0; k <= (n - m) / 2; ++k) {
    const double coeff = ((k % 2) ? -1.0 : 1.0) * factorial(n - k) /
                         (factorial(k) * factorial((n + m) / 2 - k) * factorial((n - m) / 2 - k));
    sum += coeff * std::pow(rho, n - 2 * k);
  }
  return sum;
}

}  // namespace

double zernike(int n, int m, double rho, double phi) {
  const int am = std::abs(m);
  const double norm = std::sqrt(m == 0 ? (n + 1.0) : 2.0 * (n + 1.0));
  const double r = radial(n, am, rho);
  if (m > 0) return norm * r * std::cos(am * phi);
  if (m < 0) return norm * r * std::sin(am * phi);
  return norm * r;
}

Kernel zernike_psf(const ZernikeSpec& spec) {
  spec.validate();
  const int n = spec.grid_size;
  const int c = n / 2;
  const double pupil_radius_samples = 0.5 * n / spec.oversampling;
  const double k = 2.0 * std::numbers::pi / spec.wavelength_m;

  fft::ComplexBuffer field(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double px = (x - c) / pupil_radius_samples;
      const double py = (y - c) / pupil_radius_samples;
      const double rho = std::hypot(px, py);
      std::complex<double> v{0.0, 0.0};
      if (rho <= 1.0) {
        const double phi = std::atan2(py, px);
        double wavefront_m = 0.0;
        for (const auto& t : spec.terms) {
          wavefront_m += t.weight_um * 1e-6 * zernike(t.n, t.m, rho, phi);
        }
        v = std::polar(1.0, -k * wavefront_m);
      }
      field[static_cast<std::size_t>(y) * n + x] = v;
    }
  }

  fft::ComplexBuffer spectrum(field.size());
  fft::forward_complex(field.data(), spectrum.data(), n, n);

  // Intensity with the zero frequency moved to (c, c).
  Plane intensity(n, n);
  double total = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const double e = std::norm(spectrum[static_cast<std::size_t>(v) * n + u]);
      intensity((u + c) % n, (v + c) % n) = e;
      total += e;
    }
  }

  // Smallest centered square (odd side, within the grid) holding the
  // requested energy fraction.
  const int max_half = (n % 2) ? c : c - 1;
  int half = 0;
  for (; half < max_half; ++half) {
    double inside = 0.0;
    for (int y = c - half; y <= c + half; ++y) {
      for (int x = c - half; x <= c + half; ++x) inside += intensity(x, y);
    }
    if (inside >= spec.energy_fraction * total) break;
  }
  const int side = 2 * half + 1;
  return Kernel::normalized(crop(intensity, c - half, c - half, side, side));
}

}  // namespace vcd
