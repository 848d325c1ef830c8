// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dualfield/image.hpp"

namespace dualfield {

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;
  int width = 1;
  int height = 1;
  bool operator==(const Intrinsics&) const = default;
};

/// Camera-to-world pose. The camera looks along its local -z axis with +y up,
/// so image rows (which grow downwards) map to -y.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Intrinsics intrinsics;

  /// Throws PreconditionError unless the rotation is orthonormal with det +1
  /// (tolerance 1e-6) and the intrinsics are positive.
  void validate() const;

  /// Pose at `eye` looking at `target`.
  static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                            const Intrinsics& intrinsics);
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3(0, 0, -1);
  double near = 0.0;
  double far = 1.0;

  Vec3 at(double t) const { return origin + t * direction; }
};

struct PixelCoord {
  int row = 0;
  int col = 0;
};

/// Axis-aligned box; the scene domain is the cube [-1,1]^3.
struct Bounds {
  Vec3 lo = Vec3(-1, -1, -1);
  Vec3 hi = Vec3(1, 1, 1);

  /// Slab test; returns the parametric entry/exit interval with exit > max(entry, 0).
  std::optional<std::pair<double, double>> intersect(const Vec3& origin,
                                                     const Vec3& direction) const;
  bool contains(const Vec3& p) const;
};

struct RayOptions {
  double near = 0.05;
  double far = 10.0;
  Bounds bounds;
};

/// Back-projects pixel centers through the pose. Rays that hit the bounds get
/// near/far from the box intersection clamped to [opts.near, opts.far];
/// rays that miss keep the defaults.
std::vector<Ray> generate_rays(const CameraPose& pose, std::span<const PixelCoord> pixels,
                               const RayOptions& opts = {});
Ray generate_ray(const CameraPose& pose, int row, int col, const RayOptions& opts = {});

/// Restricts a ray to the bounds; nullopt when it misses them entirely.
std::optional<Ray> clip_to_bounds(const Ray& ray, const RayOptions& opts = {});

}  // namespace dualfield
