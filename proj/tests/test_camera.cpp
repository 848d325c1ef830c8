// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Geometry>

#include "dualfield/camera.hpp"
#include "dualfield/errors.hpp"

namespace dualfield {
namespace {

CameraPose pinhole(int size, Vec3 position = Vec3(0, 0, 3)) {
  CameraPose p;
  p.translation = position;
  p.intrinsics = {static_cast<double>(size), static_cast<double>(size), size / 2.0, size / 2.0,
                  size, size};
  return p;
}

TEST(Camera, CenterPixelLooksDownNegativeZ) {
  const CameraPose p = pinhole(2);
  // With an even size the four central pixels surround the optical axis.
  const Ray r = generate_ray(p, 0, 0);
  EXPECT_EQ(r.origin, p.translation);
  EXPECT_NEAR(r.direction.norm(), 1.0, 1e-15);
  EXPECT_LT(r.direction.z(), 0.0);
  EXPECT_LT(r.direction.x(), 0.0);  // left column
  EXPECT_GT(r.direction.y(), 0.0);  // top row points up
}

TEST(Camera, DirectionFollowsPixelOffsets) {
  const CameraPose p = pinhole(64);
  const Ray r = generate_ray(p, 10, 50);
  const Vec3 expect = Vec3((50.5 - 32.0) / 64.0, -(10.5 - 32.0) / 64.0, -1.0).normalized();
  EXPECT_NEAR((r.direction - expect).norm(), 0.0, 1e-14);
}

TEST(Camera, RotationIsApplied) {
  CameraPose p = pinhole(4);
  p.rotation = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()).toRotationMatrix();
  const Ray r = generate_ray(p, 2, 2);
  // Camera -z rotated a quarter turn about +y points along world -x.
  EXPECT_LT(r.direction.x(), -0.9);
}

TEST(Camera, NearFarFromBoxIntersection) {
  const CameraPose p = pinhole(4);
  const Ray hit = generate_ray(p, 2, 2);
  EXPECT_GT(hit.near, 1.9);
  EXPECT_LT(hit.far, 4.1);
  RayOptions opts;
  opts.bounds = Bounds{Vec3(5, 5, 5), Vec3(6, 6, 6)};
  const Ray miss = generate_ray(p, 2, 2, opts);
  EXPECT_EQ(miss.near, opts.near);
  EXPECT_EQ(miss.far, opts.far);
  EXPECT_FALSE(clip_to_bounds(miss, opts).has_value());
}

TEST(Camera, RaysAgreeWithBatchGeneration) {
  const CameraPose p = pinhole(8);
  const std::vector<PixelCoord> px = {{0, 0}, {3, 5}, {7, 7}};
  const auto rays = generate_rays(p, px);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const Ray r = generate_ray(p, px[i].row, px[i].col);
    EXPECT_EQ(rays[i].direction, r.direction);
    EXPECT_EQ(rays[i].near, r.near);
  }
}

TEST(Camera, LookAtBuildsValidPose) {
  const CameraPose p = CameraPose::look_at(Vec3(2, 1, 2), Vec3::Zero(), Vec3::UnitY(),
                                           pinhole(16).intrinsics);
  EXPECT_NO_THROW(p.validate());
  const Ray r = generate_ray(p, 8, 8);
  EXPECT_NEAR(r.direction.dot(-p.translation.normalized()), 1.0, 1e-2);
}

TEST(Camera, ValidateRejectsBadPoses) {
  CameraPose p = pinhole(4);
  p.rotation(0, 0) = 2.0;
  EXPECT_THROW(p.validate(), PreconditionError);
  p = pinhole(4);
  p.rotation = -Mat3::Identity();  // a reflection
  EXPECT_THROW(p.validate(), PreconditionError);
  p = pinhole(4);
  p.intrinsics.fx = 0.0;
  EXPECT_THROW(p.validate(), PreconditionError);
  EXPECT_THROW(generate_ray(pinhole(4), 4, 0), PreconditionError);
}

TEST(Bounds, SlabIntersection) {
  const Bounds b;
  const auto hit = b.intersect(Vec3(0, 0, 5), Vec3(0, 0, -1));
  ASSERT_TRUE(hit.has_value());
  EXPECT_DOUBLE_EQ(hit->first, 4.0);
  EXPECT_DOUBLE_EQ(hit->second, 6.0);
  EXPECT_FALSE(b.intersect(Vec3(0, 0, 5), Vec3(0, 0, 1)).has_value());
  EXPECT_FALSE(b.intersect(Vec3(3, 0, 5), Vec3(0, 0, -1)).has_value());
  EXPECT_TRUE(b.contains(Vec3(1, -1, 0.5)));
  EXPECT_FALSE(b.contains(Vec3(1.0001, 0, 0)));
}

}  // namespace
}  // namespace dualfield
