#include "vcd/pose.hpp"

#include <cmath>
#include <string>

namespace vcd {

void ViewerPose::validate() const {
  require(std::isfinite(distance_m) && distance_m > 0.0, ErrorKind::Validation,
          "distance_m must be > 0");
  const double limit = std::numbers::pi / 2.0;
  require(std::isfinite(theta_x) && std::abs(theta_x) < limit, ErrorKind::Validation,
          "theta_x_rad must be inside (-pi/2, pi/2)");
  require(std::isfinite(theta_y) && std::abs(theta_y) < limit, ErrorKind::Validation,
          "theta_y_rad must be inside (-pi/2, pi/2)");
}

double CameraModel::vertical_fov() const {
  if (fov_v_rad > 0.0) return fov_v_rad;
  return 2.0 * std::atan(std::tan(fov_h_rad / 2.0) * frame_h_px / frame_w_px);
}

void CameraModel::validate() const {
  require(frame_w_px > 0 && frame_h_px > 0, ErrorKind::Precondition, "frame size must be > 0");
  require(fov_h_rad > 0.0 && fov_h_rad < std::numbers::pi, ErrorKind::Precondition,
          "horizontal FOV must be in (0, pi)");
  require(fov_v_rad >= 0.0 && fov_v_rad < std::numbers::pi, ErrorKind::Precondition,
          "vertical FOV must be in (0, pi)");
  require(face_width_m > 0.0, ErrorKind::Precondition, "face width must be > 0");
}

double Homography::determinant() const noexcept {
  const auto& m = m_;
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::inverse() const {
  const double det = determinant();
  require(std::isfinite(det) && std::abs(det) > 1e-12, ErrorKind::PoseOutOfRange,
          "homography is singular");
  const auto& m = m_;
  const double inv = 1.0 / det;
  return Homography({(m[4] * m[8] - m[5] * m[7]) * inv, (m[2] * m[7] - m[1] * m[8]) * inv,
                     (m[1] * m[5] - m[2] * m[4]) * inv, (m[5] * m[6] - m[3] * m[8]) * inv,
                     (m[0] * m[8] - m[2] * m[6]) * inv, (m[2] * m[3] - m[0] * m[5]) * inv,
                     (m[3] * m[7] - m[4] * m[6]) * inv, (m[1] * m[6] - m[0] * m[7]) * inv,
                     (m[0] * m[4] - m[1] * m[3]) * inv});
}

Homography Homography::normalized() const {
  require(std::abs(m_[8]) > 1e-15, ErrorKind::PoseOutOfRange,
          "homography cannot be normalized: bottom-right entry is zero");
  std::array<double, 9> n = m_;
  for (double& v : n) v /= m_[8];
  return Homography(n);
}

std::pair<double, double> Homography::apply(double x, double y) const noexcept {
  const auto& m = m_;
  const double w = m[6] * x + m[7] * y + m[8];
  return {(m[0] * x + m[1] * y + m[2]) / w, (m[3] * x + m[4] * y + m[5]) / w};
}

Homography operator*(const Homography& a, const Homography& b) noexcept {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r[static_cast<std::size_t>(3 * i + j)] = s;
    }
  }
  return Homography(r);
}

double focal_from_fov(int columns, double fov_rad) {
  require(columns > 0 && fov_rad > 0.0 && fov_rad < std::numbers::pi, ErrorKind::Precondition,
          "focal length needs columns > 0 and FOV in (0, pi)");
  return (columns / 2.0) / std::tan(fov_rad / 2.0);
}

namespace {

template <std::size_t R, std::size_t C>
using Mat = std::array<std::array<double, C>, R>;

template <std::size_t R, std::size_t K, std::size_t C>
Mat<R, C> mul(const Mat<R, K>& a, const Mat<K, C>& b) {
  Mat<R, C> r{};
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += a[i][k] * b[k][j];
      r[i][j] = s;
    }
  }
  return r;
}

}  // namespace

Homography perspective_matrix(double theta_x, double theta_y, double xi, double focal, int columns,
                              int rows) {
  require(xi > 0.0 && focal > 0.0, ErrorKind::Precondition, "xi and focal length must be > 0");
  // Pixel centers sit on integer coordinates, so the middle texel of an odd
  // grid is a fixed point of every tilt.
  const double cx0 = 0.5 * (columns - 1);
  const double cy0 = 0.5 * (rows - 1);

  // 2D homogeneous -> 3D, origin moved to the image center.
  const Mat<4, 3> to_3d{{{1, 0, -cx0}, {0, 1, -cy0}, {0, 0, 0}, {0, 0, 1}}};
  const double cx = std::cos(theta_x), sx = std::sin(theta_x);
  const Mat<4, 4> rot_x{{{1, 0, 0, 0}, {0, cx, -sx, 0}, {0, sx, cx, 0}, {0, 0, 0, 1}}};
  const double cy = std::cos(theta_y), sy = std::sin(theta_y);
  const Mat<4, 4> rot_y{{{cy, 0, sy, 0}, {0, 1, 0, 0}, {-sy, 0, cy, 0}, {0, 0, 0, 1}}};
  const Mat<4, 4> depth{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, xi}, {0, 0, 0, 1}}};
  const Mat<3, 4> intrinsics{{{focal, 0, cx0, 0}, {0, focal, cy0, 0}, {0, 0, 1, 0}}};

  const Mat<3, 3> m = mul(intrinsics, mul(depth, mul(rot_y, mul(rot_x, to_3d))));
  const Homography h({m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1],
                      m[2][2]});
  require(std::isfinite(h.determinant()) && std::abs(h.determinant()) > 1e-12,
          ErrorKind::PoseOutOfRange, "perspective transform is degenerate for this pose");
  return h.normalized();
}

Kernel warp_psf(const Kernel& kernel, const Homography& h) {
  const Homography inv = h.inverse();
  const int w = kernel.width();
  const int ht = kernel.height();
  Plane out(w, ht);
  for (int y = 0; y < ht; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto [sx, sy] = inv.apply(x, y);
      if (!std::isfinite(sx) || !std::isfinite(sy)) continue;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      if (fx0 < -1.0 || fy0 < -1.0 || fx0 >= w || fy0 >= ht) continue;
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      const double ax = sx - fx0;
      const double ay = sy - fy0;
      double v = 0.0;
      const double wx[2] = {1.0 - ax, ax};
      const double wy[2] = {1.0 - ay, ay};
      for (int j = 0; j < 2; ++j) {
        const int yy = y0 + j;
        if (yy < 0 || yy >= ht || wy[j] == 0.0) continue;
        for (int i = 0; i < 2; ++i) {
          const int xx = x0 + i;
          if (xx < 0 || xx >= w || wx[i] == 0.0) continue;
          v += wx[i] * wy[j] * kernel(xx, yy);
        }
      }
      out(x, y) = v;
    }
  }
  double total = 0.0;
  for (double v : out.values()) total += v;
  require(total > 1e-12, ErrorKind::PoseOutOfRange, "warp moved the whole PSF off its grid");
  return Kernel::normalized(std::move(out));
}

double estimate_distance(const FaceObservation& obs, const CameraModel& cam) {
  cam.validate();
  const double face_px = obs.bbox.width;
  require(face_px > 0.0, ErrorKind::NoFace, "face width in pixels is zero");
  return cam.face_width_m * cam.frame_w_px / (2.0 * face_px * std::tan(cam.fov_h_rad / 2.0));
}

std::pair<double, double> estimate_angles(const FaceObservation& obs, const CameraModel& cam) {
  cam.validate();
  const double half_w = cam.frame_w_px / 2.0;
  const double half_h = cam.frame_h_px / 2.0;
  const double theta_x = ((obs.mid_x() - half_w) / half_w) * (cam.fov_h_rad / 2.0);
  const double theta_y = ((obs.mid_y() - half_h) / half_h) * (cam.vertical_fov() / 2.0);
  return {theta_x, theta_y};
}

ViewerPose estimate_pose(const FaceObservation& obs, const CameraModel& cam) {
  const auto [tx, ty] = estimate_angles(obs, cam);
  return {estimate_distance(obs, cam), tx, ty};
}

Kernel pose_to_kernel(const ViewerPose& pose, const OpticalSpec& spec, int base_size,
                      double fov_rad) {
  pose.validate();
  OpticalSpec at_pose = spec;
  at_pose.view_distance_m = pose.distance_m;
  const BlurRadius r = blur_radius(at_pose);
  int size = std::max(base_size, disk_kernel_size(r.pixels) + 2);
  if (size % 2 == 0) ++size;
  const Kernel disk = disk_psf(r.pixels, size);
  return warp_for_angles(disk, pose.theta_x, pose.theta_y, fov_rad);
}

Kernel warp_for_angles(const Kernel& kernel, double theta_x, double theta_y, double fov_rad) {
  if (theta_x == 0.0 && theta_y == 0.0) return kernel;
  const double focal = focal_from_fov(kernel.width(), fov_rad);
  return warp_psf(kernel, perspective_matrix(theta_x, theta_y, focal, focal, kernel.width(),
                                             kernel.height()));
}

}  // namespace vcd
