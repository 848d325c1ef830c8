// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "dualfield/errors.hpp"

namespace dualfield {

void CameraPose::validate() const {
  constexpr double kTol = 1e-6;
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kTol) {
    throw PreconditionError("invalid pose: rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > kTol) {
    throw PreconditionError("invalid pose: rotation determinant is not +1");
  }
  if (!translation.allFinite()) throw PreconditionError("invalid pose: non-finite translation");
  const auto& k = intrinsics;
  if (k.width < 1 || k.height < 1) throw PreconditionError("invalid intrinsics: empty image");
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
    throw PreconditionError("invalid intrinsics: focal lengths must be positive");
  }
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                               const Intrinsics& intrinsics) {
  const Vec3 back = (eye - target).normalized();  // camera +z
  const Vec3 right = up.cross(back).normalized();
  const Vec3 cam_up = back.cross(right);
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = cam_up;
  pose.rotation.col(2) = back;
  pose.translation = eye;
  pose.intrinsics = intrinsics;
  return pose;
}

std::optional<std::pair<double, double>> Bounds::intersect(const Vec3& origin,
                                                           const Vec3& direction) const {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (direction[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / direction[a];
    double ta = (lo[a] - origin[a]) * inv;
    double tb = (hi[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t1 <= std::max(t0, 0.0)) return std::nullopt;
  return std::make_pair(t0, t1);
}

bool Bounds::contains(const Vec3& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

Ray generate_ray(const CameraPose& pose, int row, int col, const RayOptions& opts) {
  const auto& k = pose.intrinsics;
  if (row < 0 || row >= k.height || col < 0 || col >= k.width) {
    throw PreconditionError("pixel (" + std::to_string(row) + ", " + std::to_string(col) +
                            ") outside image");
  }
  const Vec3 local((col + 0.5 - k.cx) / k.fx, -(row + 0.5 - k.cy) / k.fy, -1.0);
  Ray ray;
  ray.origin = pose.translation;
  ray.direction = (pose.rotation * local).normalized();
  ray.near = opts.near;
  ray.far = opts.far;
  if (const auto hit = opts.bounds.intersect(ray.origin, ray.direction)) {
    const double near = std::max(hit->first, opts.near);
    const double far = std::min(hit->second, opts.far);
    if (near < far) {
      ray.near = near;
      ray.far = far;
    }
  }
  return ray;
}

std::vector<Ray> generate_rays(const CameraPose& pose, std::span<const PixelCoord> pixels,
                               const RayOptions& opts) {
  std::vector<Ray> rays;
  rays.reserve(pixels.size());
  for (const auto& p : pixels) rays.push_back(generate_ray(pose, p.row, p.col, opts));
  return rays;
}

std::optional<Ray> clip_to_bounds(const Ray& ray, const RayOptions& opts) {
  const auto hit = opts.bounds.intersect(ray.origin, ray.direction);
  if (!hit) return std::nullopt;
  Ray out = ray;
  out.near = std::max({hit->first, ray.near, 0.0});
  out.far = std::min(hit->second, ray.far);
  if (!(out.near < out.far)) return std::nullopt;
  return out;
}

}  // namespace dualfield
