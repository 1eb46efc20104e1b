// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "radbev/errors.hpp"
#include "radbev/geometry/geometry.hpp"

namespace radbev {
namespace {

Camera axis_camera() {
  Camera c;
  c.fx = c.fy = 100.0;
  c.cx = 64.0;
  c.cy = 32.0;
  c.width = 128;
  c.height = 64;
  return c;
}

TEST(ProjectToImage, PinholeArithmetic) {
  const Camera c = axis_camera();
  const ImageProjection a = project_point(c, {0.0, 0.0, 5.0});
  EXPECT_DOUBLE_EQ(a.u, 64.0);
  EXPECT_DOUBLE_EQ(a.v, 32.0);
  EXPECT_DOUBLE_EQ(a.depth, 5.0);
  EXPECT_TRUE(a.visible);
  const ImageProjection b = project_point(c, {1.0, 0.5, 2.0});
  EXPECT_DOUBLE_EQ(b.u, 114.0);
  EXPECT_DOUBLE_EQ(b.v, 57.0);
  EXPECT_FALSE(project_point(c, {0.0, 0.0, -1.0}).visible);
  EXPECT_FALSE(project_point(c, {0.0, 0.0, 0.05}).visible);
  EXPECT_FALSE(project_point(c, {10.0, 0.0, 1.0}).visible);
}

TEST(ProjectToImage, FlagsRatherThanDrops) {
  CameraRig rig{{axis_camera()}};
  const std::vector<Vec3> pts{{0, 0, 1}, {0, 0, -1}, {0, 0, 3}};
  EXPECT_EQ(project_to_image(pts, rig, 0).size(), 3u);
  EXPECT_THROW(project_to_image(pts, rig, 1), GeometryError);
}

TEST(CameraRig, ValidateCatchesBadIntrinsicsAndRotations) {
  CameraRig rig = CameraRig::ring(2, 48, 96, 2.0);
  EXPECT_NO_THROW(rig.validate());
  CameraRig bad = rig;
  bad.cameras[0].rotation[1] *= 1.01;
  EXPECT_THROW(bad.validate(), GeometryError);
  bad = rig;
  bad.cameras[1].cx = 96.0;
  EXPECT_THROW(bad.validate(), GeometryError);
  bad = rig;
  bad.cameras[1].fx = 0.0;
  EXPECT_THROW(bad.validate(), GeometryError);
}

TEST(CameraRig, YawCameraLooksAlongAzimuth) {
  const Camera c = Camera::looking_at_yaw(std::numbers::pi / 2, {0, 0, 1.5}, 48, 96, 2.0);
  // +y is straight ahead at yaw 90 degrees.
  const ImageProjection p = project_point(c, {0.0, 10.0, 1.5});
  EXPECT_NEAR(p.u, c.cx, 1e-12);
  EXPECT_NEAR(p.v, c.cy, 1e-12);
  EXPECT_NEAR(p.depth, 10.0, 1e-12);
  // Points above the camera project upward (smaller v).
  EXPECT_LT(project_point(c, {0.0, 10.0, 3.0}).v, c.cy);
  // Points to the left (+x when facing +y) project to smaller u.
  EXPECT_LT(project_point(c, {-2.0, 10.0, 1.5}).u, c.cx);
}

TEST(Geometry, UnprojectRoundTrip) {
  const CameraRig rig = CameraRig::ring(3, 48, 96, 1.8);
  for (const Camera& c : rig.cameras) {
    for (double u : {0.0, 17.3, 95.0})
      for (double v : {0.0, 30.2})
        for (double d : {0.5, 12.0}) {
          const Vec3 p = unproject(c, u, v, d);
          const ImageProjection back = project_point(c, p);
          EXPECT_NEAR(back.u, u, 1e-9);
          EXPECT_NEAR(back.v, v, 1e-9);
          EXPECT_NEAR(back.depth, d, 1e-9);
          const Vec3 again = unproject(c, back.u, back.v, back.depth);
          EXPECT_NEAR(again.x, p.x, 1e-9);
          EXPECT_NEAR(again.y, p.y, 1e-9);
          EXPECT_NEAR(again.z, p.z, 1e-9);
        }
  }
}

TEST(PillarReferencePoints, ClosedFormCenters) {
  BevGrid g;
  g.x_cells = g.y_cells = 2;
  g.extent = 1.0;
  g.z_anchors = {0.0};
  const Tensor p = pillar_reference_points(g);
  ASSERT_EQ(p.shape(), (Shape{4, 1, 3}));
  const double expect[4][2] = {{-0.5, -0.5}, {-0.5, 0.5}, {0.5, -0.5}, {0.5, 0.5}};
  for (std::size_t q = 0; q < 4; ++q) {
    EXPECT_DOUBLE_EQ(p[q * 3], expect[q][0]);
    EXPECT_DOUBLE_EQ(p[q * 3 + 1], expect[q][1]);
    EXPECT_DOUBLE_EQ(p[q * 3 + 2], 0.0);
  }
}

TEST(PillarReferencePoints, PillarsShareFootprint) {
  const BevGrid g;
  const Tensor p = pillar_reference_points(g);
  ASSERT_EQ(p.dim(1), 4u);
  for (std::size_t q = 0; q < g.cells(); q += 97) {
    for (std::size_t k = 1; k < 4; ++k) {
      EXPECT_EQ(p[(q * 4 + k) * 3], p[q * 4 * 3]);
      EXPECT_EQ(p[(q * 4 + k) * 3 + 1], p[q * 4 * 3 + 1]);
      EXPECT_GT(p[(q * 4 + k) * 3 + 2], p[(q * 4 + k - 1) * 3 + 2]);
    }
  }
  const auto cell = g.cell_of(p[g.index(7, 30) * 12], p[g.index(7, 30) * 12 + 1]);
  ASSERT_TRUE(cell.has_value());
  EXPECT_EQ(cell->first, 7u);
  EXPECT_EQ(cell->second, 30u);
}

TEST(GridAndBins, ValidateInvariants) {
  BevGrid g;
  EXPECT_NO_THROW(g.validate());
  g.z_anchors = {1.0, 1.0};
  EXPECT_THROW(g.validate(), GeometryError);
  g = BevGrid{};
  g.x_cells = 1;
  EXPECT_THROW(g.validate(), GeometryError);
  DepthBins b;
  EXPECT_NO_THROW(b.validate());
  b.d_min = 0.0;
  EXPECT_THROW(b.validate(), GeometryError);
  b = DepthBins{};
  b.count = 1;
  EXPECT_THROW(b.validate(), GeometryError);
}

TEST(ProjectToFrustum, BinCentersAndRangeClip) {
  CameraRig rig{{axis_camera()}};
  const DepthBins bins;
  const double delta = bins.width();
  const auto f = project_to_frustum(std::vector<Vec3>{{0, 0, bins.d_min + 0.5 * delta}, {0, 0, bins.d_max + 1.0}},
                                    rig, 0, bins);
  EXPECT_DOUBLE_EQ(f[0].u, 64.0);
  EXPECT_NEAR(f[0].d_idx, 0.0, 1e-12);
  EXPECT_TRUE(f[0].visible);
  EXPECT_FALSE(f[1].visible);
  EXPECT_THROW(project_to_frustum(std::vector<Vec3>{}, rig, 2, bins), GeometryError);
}

TEST(ProjectToFrustum, SameRayPointsShareColumnNotDepth) {
  const CameraRig rig = CameraRig::ring(2, 48, 96, 2.0);
  const DepthBins bins;
  const Camera& c = rig.cameras[0];
  const Vec3 centre = c.center();
  const Vec3 dir{0.9, 0.3, -0.05};
  for (double d1 : {3.0, 8.0}) {
    const double d2 = d1 + 2.0 * bins.width();
    const Vec3 p1{centre.x + d1 * dir.x, centre.y + d1 * dir.y, centre.z + d1 * dir.z};
    const Vec3 p2{centre.x + d2 * dir.x, centre.y + d2 * dir.y, centre.z + d2 * dir.z};
    const ImageProjection i1 = project_point(c, p1), i2 = project_point(c, p2);
    EXPECT_NEAR(i1.u, i2.u, 1e-9);
    EXPECT_NEAR(i1.v, i2.v, 1e-9);
    const FrustumProjection f1 = project_point_to_frustum(c, p1, bins), f2 = project_point_to_frustum(c, p2, bins);
    EXPECT_EQ(f1.u, i1.u);
    EXPECT_EQ(f2.u, i2.u);
    EXPECT_GT(std::abs(f1.d_idx - f2.d_idx), 1.0);
  }
}

TEST(DepthBins, BinOfUsesFloor) {
  const DepthBins b;
  EXPECT_EQ(b.bin_of(10.0), static_cast<std::size_t>(std::floor((10.0 - 0.5) / b.width())));
  EXPECT_EQ(b.bin_of(b.d_max), b.count - 1);
  EXPECT_FALSE(b.bin_of(0.2).has_value());
}

}  // namespace
}  // namespace radbev
