// Copyright (c) 2026 radbev contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "radbev/camera_stream/camera_stream.hpp"
#include "radbev/errors.hpp"
#include "radbev/numerics/ops.hpp"
#include "radbev/radar_stream/radar_stream.hpp"
#include "radbev/scene_sim/scene.hpp"

namespace radbev {
namespace {

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::ranges::equal(a.values(), b.values());
}

std::vector<double> flat(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

SceneObject box_at(double x, double y, Vec3 half = {1.0, 1.0, 0.8}) {
  SceneObject o;
  o.center = {x, y, half.z};
  o.half_extent = half;
  return o;
}

// ---- camera stream ------------------------------------------------------

TEST(EncodeImages, ShapesAndDepthNormalization) {
  const SensorSetup setup = SensorSetup::desk();
  const SceneFrame f = generate_scene(random_scene(3, 3, setup), setup);
  Rng rng(1);
  ImageEncoderParams p = ImageEncoderParams::make(16, 16, 32, rng);
  Tape tape;
  const ImageStreamOutput out = encode_images(tape, f.images, p);
  EXPECT_EQ(out.stacked_context().shape(), (Shape{2, 16, 48, 96}));
  EXPECT_EQ(out.stacked_depth().shape(), (Shape{2, 32, 48, 96}));
  EXPECT_EQ(out.stacked_occupancy().shape(), (Shape{2, 1, 48, 96}));
  const Tensor depth = out.stacked_depth();
  const std::size_t hw = 48 * 96;
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t i = 0; i < hw; ++i) {
      double s = 0.0;
      for (std::size_t d = 0; d < 32; ++d) {
        const double v = depth[(n * 32 + d) * hw + i];
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        s += v;
      }
      ASSERT_NEAR(s, 1.0, 1e-12);
    }
  }
  for (double v : flat(out.stacked_occupancy())) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(EncodeImages, ZeroImageGivesHalfOccupancy) {
  Rng rng(2);
  ImageEncoderParams p = ImageEncoderParams::make(8, 8, 16, rng);
  Tape tape;
  const ImageStreamOutput out = encode_images(tape, Tensor({1, 3, 6, 10}), p);
  for (double v : flat(out.stacked_occupancy())) EXPECT_EQ(v, 0.5);
  for (double v : flat(out.stacked_depth())) EXPECT_NEAR(v, 1.0 / 16.0, 1e-15);
}

TEST(EncodeImages, RejectsNonFiniteAndBadShapes) {
  Rng rng(3);
  ImageEncoderParams p = ImageEncoderParams::make(8, 8, 16, rng);
  Tape tape;
  Tensor img({1, 3, 4, 4});
  img[5] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(encode_images(tape, img, p), NumericError);
  EXPECT_THROW(encode_images(tape, Tensor({1, 4, 4, 4}), p), DimensionError);
}

TEST(EncodeImages, Deterministic) {
  Rng rng_a(4), rng_b(4);
  ImageEncoderParams pa = ImageEncoderParams::make(8, 8, 16, rng_a);
  ImageEncoderParams pb = ImageEncoderParams::make(8, 8, 16, rng_b);
  Rng data(5);
  Tensor img({2, 3, 6, 8});
  for (double& v : img.values()) v = data.uniform();
  Tape ta, tb;
  const ImageStreamOutput a = encode_images(ta, img, pa), b = encode_images(tb, img, pb);
  EXPECT_TRUE(same(a.stacked_context(), b.stacked_context()));
  EXPECT_TRUE(same(a.stacked_depth(), b.stacked_depth()));
}

TEST(IdealImageOutputs, EmptySceneIsFarOneHot) {
  const SensorSetup setup = SensorSetup::desk();
  const SceneFrame f = generate_scene(SceneSpec{}, setup);
  Tape tape;
  const ImageStreamOutput out = ideal_image_outputs(tape, f.gt, {}, setup.bins, 16);
  for (double v : flat(out.stacked_occupancy())) EXPECT_EQ(v, 0.0);
  const Tensor depth = out.stacked_depth();
  const std::size_t d = setup.bins.count, hw = 48 * 96;
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < hw; i += 97) EXPECT_EQ(depth[(n * d + k) * hw + i], k + 1 == d ? 1.0 : 0.0);
    }
  }
}

TEST(IdealImageOutputs, ObjectPixelsPeakAtTrueBin) {
  const SensorSetup setup = SensorSetup::desk();
  SceneSpec spec;
  spec.objects = {box_at(10.0, 0.0)};
  const SceneFrame f = generate_scene(spec, setup);
  Tape tape;
  const ImageStreamOutput out = ideal_image_outputs(tape, f.gt, spec.objects, setup.bins, 16);
  const Tensor& dist = out.depth[0].value();
  const Tensor& occ = out.occupancy[0].value();
  const Tensor& depth = f.gt.depth_image[0];
  const std::size_t d = setup.bins.count, hw = depth.size();
  std::size_t checked = 0;
  for (std::size_t i = 0; i < hw; ++i) {
    if (depth[i] == 0.0) {
      EXPECT_EQ(occ[i], 0.0);
      continue;
    }
    EXPECT_EQ(occ[i], 1.0);
    std::size_t best = 0;
    double sum = 0.0, mean = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double p = dist[k * hw + i];
      sum += p;
      mean += p * setup.bins.center(k);
      if (p > dist[best * hw + i]) best = k;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_NEAR(mean, depth[i], 1e-9);
    EXPECT_EQ(best, *setup.bins.bin_of(depth[i]));
    ++checked;
  }
  EXPECT_GT(checked, 10u);
  const Camera& c = setup.rig.cameras[0];
  const std::size_t centre = static_cast<std::size_t>(std::lround(c.cy)) * c.width + static_cast<std::size_t>(c.cx);
  ASSERT_GT(depth[centre], 0.0);
  const std::size_t expected = static_cast<std::size_t>(std::floor((depth[centre] - setup.bins.d_min) / setup.bins.width()));
  EXPECT_GE(dist[expected * hw + centre], 0.5);
}

TEST(IdealImageOutputs, SameRayColumnCarriesNearDepth) {
  const SensorSetup setup = SensorSetup::desk();
  const SceneSpec spec = same_ray_scenario(8.0, 16.0, 0.0, setup);
  const SceneFrame f = generate_scene(spec, setup);
  Tape tape;
  const ImageStreamOutput out = ideal_image_outputs(tape, f.gt, spec.objects, setup.bins, 16);
  const Camera& c = setup.rig.cameras[0];
  const std::size_t u = static_cast<std::size_t>(std::lround(c.cx)), v = static_cast<std::size_t>(std::lround(c.cy));
  const std::size_t idx = v * c.width + u, hw = c.width * c.height;
  ASSERT_EQ(f.gt.object_id[0][idx], 0.0);
  const std::size_t near_bin = *setup.bins.bin_of(f.gt.depth_image[0][idx]);
  EXPECT_LT(setup.bins.center(near_bin), 8.5);
  EXPECT_GE(out.depth[0].value()[near_bin * hw + idx], 0.5);
  const std::vector<double> e = object_embedding(kClassPedestrian, 0, 16);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(out.context[0].value()[k * hw + idx], e[k]);
}

// ---- radar stream -------------------------------------------------------

RadarPoint point(double x, double y, double z = 0.5, int sweep = 0) {
  RadarPoint p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.rcs = 5.0;
  p.sweep = sweep;
  return p;
}

TEST(AccumulateSweeps, StationaryDuplicatesAndShifts) {
  RadarPointCloud s0, s1;
  s0.points = {point(10, 1), point(5, -2)};
  s1.points = s0.points;
  for (RadarPoint& p : s1.points) p.sweep = 1;
  const RadarPointCloud still = accumulate_sweeps({s0, s1}, {EgoPose{}, EgoPose{}});
  ASSERT_EQ(still.size(), 4u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(still.points[i].x, still.points[i + 2].x);
    EXPECT_EQ(still.points[i].y, still.points[i + 2].y);
    EXPECT_EQ(still.points[i + 2].sweep, 1);
  }
  const RadarPointCloud moved = accumulate_sweeps({s0, s1}, {EgoPose{}, EgoPose{-1.0, 0.0, 0.0}});
  EXPECT_DOUBLE_EQ(moved.points[2].x, 9.0);
  EXPECT_DOUBLE_EQ(moved.points[3].x, 4.0);
  EXPECT_DOUBLE_EQ(moved.points[2].y, 1.0);
  EXPECT_TRUE(accumulate_sweeps({}, {}).empty());
  EXPECT_TRUE(accumulate_sweeps({RadarPointCloud{}, RadarPointCloud{}}, {EgoPose{}, EgoPose{}}).empty());
}

TEST(AccumulateSweeps, RejectsMissingPoseAndTooManySweeps) {
  RadarPointCloud s;
  s.points = {point(3, 0)};
  EXPECT_THROW(accumulate_sweeps({s, s}, {EgoPose{}}), ConfigError);
  EXPECT_THROW(accumulate_sweeps(std::vector<RadarPointCloud>(8, s), std::vector<EgoPose>(8)), ConfigError);
  EXPECT_NO_THROW(accumulate_sweeps(std::vector<RadarPointCloud>(7, s), std::vector<EgoPose>(7)));
}

TEST(VoxelizeFrustum, BinningArithmetic) {
  const SensorSetup setup = SensorSetup::desk();
  const Camera& c = setup.rig.cameras[0];
  RadarPointCloud cloud;
  cloud.points = {point(10.0, 0.0, 1.5)};
  const FrustumPillars fp = voxelize_frustum(cloud, setup.rig, 0, setup.bins, setup.radar_stride);
  ASSERT_EQ(fp.placed(), 1u);
  EXPECT_EQ(fp.columns, 24u);
  const auto col = static_cast<std::size_t>(std::floor(c.cx / static_cast<double>(setup.radar_stride)));
  const auto bin = static_cast<std::size_t>(std::floor((10.0 - setup.bins.d_min) / setup.bins.width()));
  EXPECT_EQ(fp.pillar[0], static_cast<std::int64_t>(bin * fp.columns + col));
  EXPECT_EQ(fp.points_in(col, bin), std::vector<std::size_t>{0});
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_GE(fp.features[0][k], -0.5);
    EXPECT_LE(fp.features[0][k], 0.5);
  }
  EXPECT_DOUBLE_EQ(fp.features[0][2], 0.75);
  EXPECT_DOUBLE_EQ(fp.features[0][3], 0.5);
}

TEST(VoxelizeFrustum, SameAzimuthSplitsByBin) {
  const SensorSetup setup = SensorSetup::desk();
  RadarPointCloud cloud;
  cloud.points = {point(16.0, 0.0), point(8.0, 0.0)};
  const FrustumPillars fp = voxelize_frustum(cloud, setup.rig, 0, setup.bins, setup.radar_stride);
  ASSERT_EQ(fp.placed(), 2u);
  EXPECT_EQ(fp.pillar[0] % static_cast<std::int64_t>(fp.columns), fp.pillar[1] % static_cast<std::int64_t>(fp.columns));
  EXPECT_NE(fp.pillar[0], fp.pillar[1]);
  EXPECT_EQ(fp.source[0], 1u);
}

TEST(VoxelizeFrustum, ConservesPointCounts) {
  const SensorSetup setup = SensorSetup::desk();
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const SceneFrame f = generate_scene(random_scene(seed, 3, setup), setup);
    const RadarPointCloud cloud = accumulate_sweeps(f.sweeps, f.poses);
    for (std::size_t cam = 0; cam < setup.rig.size(); ++cam) {
      const FrustumPillars fp = voxelize_frustum(cloud, setup.rig, cam, setup.bins, setup.radar_stride);
      EXPECT_EQ(fp.placed() + fp.dropped, cloud.size());
      std::size_t in_pillars = 0;
      for (std::size_t col = 0; col < fp.columns; ++col) {
        for (std::size_t bin = 0; bin < fp.depth_bins; ++bin) in_pillars += fp.points_in(col, bin).size();
      }
      EXPECT_EQ(in_pillars, fp.placed());
    }
  }
  RadarPointCloud behind;
  behind.points = {point(-10.0, 0.0), point(100.0, 0.0)};
  const FrustumPillars fp = voxelize_frustum(behind, setup.rig, 0, setup.bins, setup.radar_stride);
  EXPECT_EQ(fp.placed(), 0u);
  EXPECT_EQ(fp.dropped, 2u);
}

std::vector<FrustumPillars> pillars_of(const RadarPointCloud& cloud, const SensorSetup& setup) {
  std::vector<FrustumPillars> out;
  for (std::size_t cam = 0; cam < setup.rig.size(); ++cam) {
    out.push_back(voxelize_frustum(cloud, setup.rig, cam, setup.bins, setup.radar_stride));
  }
  return out;
}

TEST(EncodePillars, ShapesAndEmptyClosedForm) {
  const SensorSetup setup = SensorSetup::desk();
  Rng rng(6);
  RadarEncoderParams p = RadarEncoderParams::make(16, 16, rng);
  Tape tape;
  const RadarStreamOutput out = encode_pillars(tape, pillars_of(RadarPointCloud{}, setup), p);
  EXPECT_EQ(out.stacked_occupancy().shape(), (Shape{2, 32, 1, 24}));
  EXPECT_EQ(out.stacked_context().shape(), (Shape{2, 16, 32, 24}));
  for (double v : flat(out.stacked_occupancy())) EXPECT_EQ(v, 0.5);
  for (double v : flat(out.stacked_context())) EXPECT_EQ(v, 0.0);
}

TEST(EncodePillars, PermutationInvariant) {
  const SensorSetup setup = SensorSetup::desk();
  const SceneFrame f = generate_scene(random_scene(7, 3, setup), setup);
  const RadarPointCloud cloud = accumulate_sweeps(f.sweeps, f.poses);
  RadarPointCloud shuffled = cloud;
  std::reverse(shuffled.points.begin(), shuffled.points.end());
  Rng rng(7);
  RadarEncoderParams p = RadarEncoderParams::make(16, 16, rng);
  Tape ta, tb;
  const RadarStreamOutput a = encode_pillars(ta, pillars_of(cloud, setup), p);
  const RadarStreamOutput b = encode_pillars(tb, pillars_of(shuffled, setup), p);
  EXPECT_TRUE(same(a.stacked_occupancy(), b.stacked_occupancy()));
  EXPECT_TRUE(same(a.stacked_context(), b.stacked_context()));
}

TEST(EncodePillars, MaxPoolIgnoresDuplicatePoints) {
  const SensorSetup setup = SensorSetup::desk();
  RadarPointCloud one, twice;
  one.points = {point(10.0, 0.5), point(12.0, -3.0)};
  twice.points = {point(10.0, 0.5), point(12.0, -3.0), point(10.0, 0.5)};
  Rng rng(8);
  RadarEncoderParams p = RadarEncoderParams::make(16, 16, rng);
  Tape ta, tb;
  const RadarStreamOutput a = encode_pillars(ta, pillars_of(one, setup), p);
  const RadarStreamOutput b = encode_pillars(tb, pillars_of(twice, setup), p);
  EXPECT_TRUE(same(a.stacked_context(), b.stacked_context()));
}

TEST(EncodePillars, EmptyPillarsAwayFromPointsMatchEmptyInput) {
  const SensorSetup setup = SensorSetup::desk();
  RadarPointCloud cloud;
  cloud.points = {point(10.0, 0.0)};
  const std::vector<FrustumPillars> pl = pillars_of(cloud, setup);
  ASSERT_EQ(pl[0].placed(), 1u);
  const auto occupied = static_cast<std::size_t>(pl[0].pillar[0]);
  const std::size_t ob = occupied / pl[0].columns, oc = occupied % pl[0].columns;
  Rng rng(9);
  RadarEncoderParams p = RadarEncoderParams::make(16, 16, rng);
  for (Parameter* b : {&p.conv1_b, &p.conv2_b, &p.ctx_b, &p.occ_b}) {
    for (double& v : b->value.values()) v = rng.uniform(-0.5, 0.5);
  }
  Tape ta, tb;
  const RadarStreamOutput a = encode_pillars(ta, pl, p);
  const RadarStreamOutput b = encode_pillars(tb, pillars_of(RadarPointCloud{}, setup), p);
  const Tensor &ra = a.occupancy[0].value(), &rb = b.occupancy[0].value();
  std::size_t differing = 0;
  for (std::size_t bin = 0; bin < pl[0].depth_bins; ++bin) {
    for (std::size_t col = 0; col < pl[0].columns; ++col) {
      const std::size_t i = bin * pl[0].columns + col;
      const bool near = std::max(bin, ob) - std::min(bin, ob) <= 2 && std::max(col, oc) - std::min(col, oc) <= 2;
      if (near) {
        differing += ra[i] != rb[i];
      } else {
        EXPECT_EQ(ra[i], rb[i]);
      }
    }
  }
  EXPECT_GT(differing, 0u);
  EXPECT_TRUE(same(a.occupancy[1].value(), b.occupancy[1].value()));
}

TEST(IdealRadarOutputs, OccupiedPillarsOnly) {
  const SensorSetup setup = SensorSetup::desk();
  RadarPointCloud cloud;
  cloud.points = {point(10.0, 0.0), point(10.0, 0.0)};
  const std::vector<FrustumPillars> pl = pillars_of(cloud, setup);
  Tape tape;
  const RadarStreamOutput out = ideal_radar_outputs(tape, pl, 16);
  double occupied = 0.0;
  for (double v : out.occupancy[0].value().values()) occupied += v;
  EXPECT_EQ(occupied, 1.0);
  for (double v : out.occupancy[1].value().values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(ideal_radar_outputs(tape, pl, 6), DimensionError);
}

TEST(RadarCsv, RoundTripAndValidation) {
  RadarPointCloud cloud;
  cloud.points = {point(1.25, -3.5, 0.75, 2), point(0.1, 0.2, 0.3, 6)};
  cloud.points[1].vx = -1.5;
  std::stringstream ss;
  write_radar_csv(ss, cloud);
  const RadarPointCloud back = read_radar_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.points[0].x, 1.25);
  EXPECT_EQ(back.points[0].sweep, 2);
  EXPECT_EQ(back.points[1].vx, -1.5);
  RadarPointCloud bad;
  bad.points = {point(1, 1, 1, 7)};
  EXPECT_THROW(bad.validate(), DataError);
  std::stringstream garbage("x,y,z,rcs,vx,vy,sweep\n1,2,oops\n");
  EXPECT_THROW(read_radar_csv(garbage), DataError);
}

}  // namespace
}  // namespace radbev
