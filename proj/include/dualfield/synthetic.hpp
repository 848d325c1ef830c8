// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "dualfield/camera.hpp"
#include "dualfield/dataset.hpp"
#include "dualfield/field.hpp"

namespace dualfield {

/// Sphere whose density ramps linearly from `density` to 0 across a shell of
/// width `softness` centred on `radius`.
struct SoftSphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
  double softness = 0.1;
  double density = 40.0;
  Vec3 color = Vec3(0.8, 0.2, 0.1);
};

/// Closed-form ground-truth scene. Color is the density-weighted mix of the
/// spheres covering a point.
class AnalyticScene {
 public:
  AnalyticScene() = default;
  explicit AnalyticScene(std::vector<SoftSphere> spheres, Bounds bounds = {})
      : spheres_(std::move(spheres)), bounds_(bounds) {}

  double density(const Vec3& x) const;
  Vec3 color(const Vec3& x) const;
  Radiance operator()(const Vec3& x) const { return {density(x), color(x)}; }

  const std::vector<SoftSphere>& spheres() const noexcept { return spheres_; }
  const Bounds& bounds() const noexcept { return bounds_; }

 private:
  std::vector<SoftSphere> spheres_;
  Bounds bounds_;
};

enum class SceneRecipe {
  kEmpty,    // zero density everywhere
  kSphere,   // one opaque red sphere at the origin
  kSpheres,  // three colored soft spheres
  kLarge,    // one large red sphere filling most of the frame
};

SceneRecipe parse_scene_recipe(std::string_view name);
std::string_view scene_recipe_name(SceneRecipe recipe);

struct SyntheticOptions {
  int n_views = 8;
  int height = 64;
  int width = 64;
  std::uint64_t seed = 0;
  int n_samples = 64;
  double ring_radius = 3.0;
  double elevation_deg = 20.0;
  double fov_deg = 50.0;
  Vec3 background = Vec3::Zero();
};

AnalyticScene make_scene(SceneRecipe recipe);

/// Evenly spaced views on a ring around the origin (the seed rotates the
/// ring's starting azimuth).
std::vector<CameraPose> ring_poses(const SyntheticOptions& options);

/// Cameras on a ring looking at the origin; each image is the analytic scene
/// composited with uniform samples and quantized to 8 bits, so the dataset
/// survives a PNG round trip unchanged.
std::pair<AnalyticScene, EditDataset> generate_synthetic_scene(SceneRecipe recipe,
                                                               const SyntheticOptions& options);

}  // namespace dualfield
