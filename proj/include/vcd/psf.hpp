#pragma once

#include <optional>
#include <vector>

#include "vcd/kernel.hpp"

namespace vcd {

/// Eye and display geometry that fixes the defocus blur radius.
///
/// Either the thin-lens path (focal length and eye depth locate the plane of
/// focus) or an explicit focus distance from a spectacle prescription is used;
/// `focus_distance_m` wins when set.
struct OpticalSpec {
  double pupil_diameter_m = 0.004;
  double focal_length_m = 0.0168;
  double eye_depth_m = 0.017;
  double view_distance_m = 1.0;
  double pixel_pitch_m = 0.000254;
  std::optional<double> focus_distance_m;

  /// Far point of a sphere prescription: d_f = 1/|S|.
  static OpticalSpec from_sphere_diopters(double sphere_diopters, double view_distance_m,
                                          double pupil_diameter_m = 0.004,
                                          double pixel_pitch_m = 0.000254);

  void validate() const;

  /// Distance to the plane of focus in meters; throws OpticalConfig when the
  /// configuration puts it at or behind the eye, or at infinity.
  double focus_distance() const;
};

struct BlurRadius {
  double meters = 0.0;
  double pixels = 0.0;
};

BlurRadius blur_radius(const OpticalSpec& spec);

/// Smallest odd grid side that holds a disk of the given radius.
int disk_kernel_size(double radius_px);

/// Filled disk with a one-pixel antialiased rim (16x16 supersampled coverage).
Kernel disk_psf(double radius_px, int size);

struct ZernikeTerm {
  int n = 0;
  int m = 0;
  double weight_um = 0.0;
};

struct ZernikeSpec {
  std::vector<ZernikeTerm> terms;
  double pupil_radius_m = 0.002;
  double wavelength_m = 550e-9;
  int grid_size = 128;
  /// Grid samples per pupil diameter is grid_size / oversampling; 2 keeps the
  /// intensity PSF Nyquist sampled.
  double oversampling = 2.0;
  /// Fraction of energy the cropped kernel must retain.
  double energy_fraction = 0.999;

  void validate() const;
};

/// Noll-normalized Zernike polynomial on the unit disk (rho <= 1).
double zernike(int n, int m, double rho, double phi);

/// |FT(A * exp(-i 2 pi W / lambda))|^2, centered, cropped to the energetic
/// support and normalized.
Kernel zernike_psf(const ZernikeSpec& spec);

}  // namespace vcd
