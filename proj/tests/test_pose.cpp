#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "scenes.hpp"
#include "vcd/pose.hpp"

namespace vcd {
namespace {

TEST(Perspective, ZeroAnglesWithXiEqualFocalIsIdentity) {
  for (int cols : {33, 128, 1280}) {
    const double f = focal_from_fov(cols, kDefaultFovRad);
    const Homography h = perspective_matrix(0.0, 0.0, f, f, cols, cols * 3 / 4);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(h(r, c), r == c ? 1.0 : 0.0, 1e-9);
    }
  }
}

TEST(Perspective, BottomRightIsOne) {
  const double f = focal_from_fov(64, kDefaultFovRad);
  EXPECT_DOUBLE_EQ(perspective_matrix(0.3, -0.5, 1.7 * f, f, 64, 64)(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(perspective_matrix(-1.0, 0.2, f, f, 64, 48)(2, 2), 1.0);
}

TEST(Perspective, ContinuousInAngle) {
  const double f = focal_from_fov(64, kDefaultFovRad);
  const Homography a = perspective_matrix(0.4, 0.3, f, f, 64, 64);
  const Homography b = perspective_matrix(0.4 + 1e-6, 0.3 + 1e-6, f, f, 64, 64);
  double norm = 0.0;
  for (int i = 0; i < 9; ++i) norm += std::pow(a.values()[i] - b.values()[i], 2);
  EXPECT_LT(std::sqrt(norm), 1e-4);
}

TEST(Perspective, InvalidArguments) {
  EXPECT_THROW(perspective_matrix(0, 0, 0.0, 10.0, 8, 8), Error);
  EXPECT_THROW(perspective_matrix(0, 0, 10.0, -1.0, 8, 8), Error);
}

TEST(Homography, InverseComposesToIdentity) {
  const double f = focal_from_fov(64, kDefaultFovRad);
  const Homography h = perspective_matrix(0.3, 0.2, f, f, 64, 64);
  const Homography id = (h * h.inverse()).normalized();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(id(r, c), r == c ? 1.0 : 0.0, 1e-9);
  }
  EXPECT_THROW(Homography({1, 2, 3, 2, 4, 6, 0, 0, 1}).inverse(), Error);
}

TEST(WarpPsf, IdentityLeavesKernel) {
  const Kernel k = disk_psf(5.0, 15);
  const Kernel w = warp_psf(k, Homography());
  for (int y = 0; y < 15; ++y) {
    for (int x = 0; x < 15; ++x) EXPECT_NEAR(w(x, y), k(x, y), 1e-9);
  }
}

TEST(WarpPsf, FortyFiveDegreesGivesEllipse) {
  const Kernel k = disk_psf(8.0, 41);
  const Kernel w = warp_for_angles(k, 0.0, deg_to_rad(45.0));
  EXPECT_NEAR(w.sum(), 1.0, 1e-6);
  EXPECT_NEAR(testing::axis_ratio(w.values()), std::cos(deg_to_rad(45.0)), 0.05);
  // The middle texel is a fixed point, so tilt sign and axis do not matter.
  for (const auto& [ax, ay] : {std::pair{45.0, 0.0}, std::pair{-45.0, 0.0}, std::pair{0.0, -45.0}}) {
    const Kernel v = warp_for_angles(k, deg_to_rad(ax), deg_to_rad(ay));
    EXPECT_NEAR(testing::axis_ratio(v.values()), testing::axis_ratio(w.values()), 1e-9);
  }
}

TEST(WarpPsf, SumStaysOneAcrossAngles) {
  const Kernel k = disk_psf(6.0, 21);
  for (double ax = -60; ax <= 60; ax += 15) {
    for (double ay = -60; ay <= 60; ay += 20) {
      EXPECT_NEAR(warp_for_angles(k, deg_to_rad(ax), deg_to_rad(ay)).sum(), 1.0, 1e-6);
    }
  }
}

TEST(WarpPsf, RoundTripThroughInverse) {
  // A smooth kernel keeps bilinear resampling error small.
  const Kernel k = testing::gaussian_kernel(4.0, 41);
  const double f = focal_from_fov(41, kDefaultFovRad);
  const Homography h = perspective_matrix(0.0, deg_to_rad(15.0), f, f, 41, 41);
  const Kernel back = warp_psf(warp_psf(k, h), h.inverse().normalized());
  const double peak = k.max_value();
  for (int y = 0; y < 41; ++y) {
    for (int x = 0; x < 41; ++x) EXPECT_LE(std::abs(back(x, y) - k(x, y)), 0.02 * peak);
  }
}

TEST(WarpPsf, MassOutsideGridRejected) {
  const Homography shift({1, 0, 500, 0, 1, 0, 0, 0, 1});
  try {
    warp_psf(disk_psf(3.0, 9), shift);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoseOutOfRange);
  }
}

CameraModel camera(double fov_deg) {
  CameraModel cam;
  cam.frame_w_px = 1280;
  cam.frame_h_px = 720;
  cam.fov_h_rad = deg_to_rad(fov_deg);
  cam.face_width_m = 0.15;
  return cam;
}

FaceObservation face_at(double mid_x, double mid_y, int width) {
  FaceObservation o;
  o.bbox = {static_cast<int>(mid_x - width / 2.0), static_cast<int>(mid_y - width / 2.0), width, width};
  return o;
}

TEST(Distance, WorkedExample) {
  const double d = estimate_distance(face_at(640, 360, 256), camera(60.0));
  EXPECT_NEAR(d, 0.6495, 5e-5);
  EXPECT_NEAR(d, 0.15 * 1280 / (2 * 256 * std::tan(deg_to_rad(30.0))), 1e-12);
}

TEST(Distance, InverseInFaceWidth) {
  const CameraModel cam = camera(80.0);
  for (int fp : {40, 100, 256, 500}) {
    const double d1 = estimate_distance(face_at(640, 360, fp), cam);
    const double d2 = estimate_distance(face_at(640, 360, 2 * fp), cam);
    EXPECT_NEAR(d2, d1 / 2.0, 1e-12);
    EXPECT_NEAR(d1 * fp, estimate_distance(face_at(640, 360, 100), cam) * 100, 1e-9);
  }
}

TEST(Distance, NoFace) {
  try {
    estimate_distance(face_at(640, 360, 0), camera(80.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoFace);
  }
}

TEST(Distance, DefaultFovIsEightyDegrees) {
  EXPECT_DOUBLE_EQ(CameraModel{}.fov_h_rad, deg_to_rad(80.0));
}

TEST(Angles, CenterEdgeAndWorkedExample) {
  const CameraModel cam = camera(80.0);
  const auto [cx, cy] = estimate_angles(face_at(640, 360, 100), cam);
  EXPECT_NEAR(cx, 0.0, 1e-12);
  EXPECT_NEAR(cy, 0.0, 1e-12);
  FaceObservation edge;
  edge.bbox = {1230, 310, 100, 100};  // midpoint (1280, 360)
  EXPECT_NEAR(estimate_angles(edge, cam).first, deg_to_rad(40.0), 1e-12);
  const auto [tx, ty] = estimate_angles(face_at(960, 360, 100), cam);
  EXPECT_NEAR(tx, 0.3491, 5e-5);
  EXPECT_NEAR(ty, 0.0, 1e-12);
}

TEST(Angles, OddUnderMirroring) {
  const CameraModel cam = camera(80.0);
  FaceObservation a;
  a.bbox = {900, 100, 80, 120};
  FaceObservation b;
  b.bbox = {1280 - 900 - 80, 720 - 100 - 120, 80, 120};
  const auto [ax, ay] = estimate_angles(a, cam);
  const auto [bx, by] = estimate_angles(b, cam);
  EXPECT_EQ(ax, -bx);
  EXPECT_EQ(ay, -by);
}

TEST(PoseKernel, InFocusIsDelta) {
  const OpticalSpec spec;
  const Kernel k = pose_to_kernel(ViewerPose{spec.focus_distance(), 0.0, 0.0}, spec);
  EXPECT_TRUE(k.is_delta());
}

TEST(PoseKernel, DistanceChangesRadius) {
  const OpticalSpec spec;
  const Kernel near = pose_to_kernel(ViewerPose{1.0, 0.0, 0.0}, spec);
  const Kernel far = pose_to_kernel(ViewerPose{2.0, 0.0, 0.0}, spec);
  OpticalSpec s1 = spec, s2 = spec;
  s1.view_distance_m = 1.0;
  s2.view_distance_m = 2.0;
  const double r1 = blur_radius(s1).pixels;
  const double r2 = blur_radius(s2).pixels;
  ASSERT_NE(r1, r2);
  // The central texel of a disk kernel is 1 / area.
  EXPECT_NEAR(near.max_value(), 1.0 / (M_PI * r1 * r1), 0.05 / (M_PI * r1 * r1));
  EXPECT_NEAR(far.max_value(), 1.0 / (M_PI * r2 * r2), 0.05 / (M_PI * r2 * r2));
}

TEST(PoseKernel, FortyFiveDegreesIsElliptical) {
  OpticalSpec spec;
  spec.pupil_diameter_m = 0.008;
  const Kernel k = pose_to_kernel(ViewerPose{1.0, 0.0, deg_to_rad(45.0)}, spec);
  EXPECT_NEAR(k.sum(), 1.0, 1e-6);
  EXPECT_NEAR(testing::axis_ratio(k.values()), std::cos(deg_to_rad(45.0)), 0.05);
}

TEST(PoseKernel, InvalidPoseRejected) {
  EXPECT_THROW(pose_to_kernel(ViewerPose{0.0, 0.0, 0.0}, OpticalSpec{}), Error);
  EXPECT_THROW(pose_to_kernel(ViewerPose{1.0, 1.6, 0.0}, OpticalSpec{}), Error);
}

}  // namespace
}  // namespace vcd
