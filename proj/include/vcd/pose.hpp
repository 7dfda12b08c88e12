#pragma once

#include <array>
#include <numbers>
#include <utility>

#include "vcd/kernel.hpp"
#include "vcd/psf.hpp"
#include "vcd/ringing.hpp"

namespace vcd {

constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Horizontal field of view of the prototype camera.
inline constexpr double kDefaultFovRad = deg_to_rad(80.0);

/// Viewer position relative to the screen normal.
struct ViewerPose {
  double distance_m = 1.0;
  double theta_x = 0.0;
  double theta_y = 0.0;

  void validate() const;
  friend bool operator==(const ViewerPose&, const ViewerPose&) = default;
};

struct CameraModel {
  int frame_w_px = 1280;
  int frame_h_px = 720;
  double fov_h_rad = kDefaultFovRad;
  double fov_v_rad = 0.0;  // 0 derives it from fov_h and the aspect ratio
  double face_width_m = 0.15;

  double vertical_fov() const;
  void validate() const;
};

struct FaceObservation {
  BoundingBox bbox;

  double mid_x() const noexcept { return bbox.x + 0.5 * bbox.width; }
  double mid_y() const noexcept { return bbox.y + 0.5 * bbox.height; }
};

/// 3x3 projective map, row-major.
class Homography {
 public:
  Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  explicit Homography(const std::array<double, 9>& m) : m_(m) {}

  double operator()(int r, int c) const noexcept { return m_[static_cast<std::size_t>(3 * r + c)]; }
  const std::array<double, 9>& values() const noexcept { return m_; }

  double determinant() const noexcept;
  /// Throws PoseOutOfRange when singular.
  Homography inverse() const;
  /// Scaled so the bottom-right entry is 1.
  Homography normalized() const;
  std::pair<double, double> apply(double x, double y) const noexcept;

  friend Homography operator*(const Homography& a, const Homography& b) noexcept;

 private:
  std::array<double, 9> m_;
};

/// Camera focal length in pixels for an image `columns` wide.
double focal_from_fov(int columns, double fov_rad);

/// Intrinsics * depth shift * R_y * R_x * centering projection, normalized so
/// H(2,2) = 1. With zero angles and xi = f the result is the identity.
Homography perspective_matrix(double theta_x, double theta_y, double xi, double focal, int columns,
                              int rows);

/// Inverse-mapped bilinear resampling of the kernel through `h`, renormalized.
Kernel warp_psf(const Kernel& kernel, const Homography& h);

/// Warps a kernel for a viewer at (theta_x, theta_y) with xi equal to the
/// focal length implied by `fov_rad` on the kernel grid.
Kernel warp_for_angles(const Kernel& kernel, double theta_x, double theta_y,
                       double fov_rad = kDefaultFovRad);

/// Similar triangles: r = u_w f_w / (2 f_p tan(FOV_h / 2)).
double estimate_distance(const FaceObservation& obs, const CameraModel& cam);

/// Midpoint offset from the frame center, normalized to [-1, 1] and scaled by
/// half the field of view. Returns (theta_x, theta_y) in radians.
std::pair<double, double> estimate_angles(const FaceObservation& obs, const CameraModel& cam);

ViewerPose estimate_pose(const FaceObservation& obs, const CameraModel& cam);

/// Disk PSF for the pose's distance, warped for its viewing angles. The grid is
/// at least `base_size` and always large enough for the disk.
Kernel pose_to_kernel(const ViewerPose& pose, const OpticalSpec& spec, int base_size = 33,
                      double fov_rad = kDefaultFovRad);

}  // namespace vcd
