// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "dualfield/errors.hpp"
#include "dualfield/renderer.hpp"
#include "dualfield/rng.hpp"

namespace dualfield {
namespace {

double sphere_density(const SoftSphere& s, const Vec3& x) {
  const double r = (x - s.center).norm();
  const double ramp = (s.radius + 0.5 * s.softness - r) / s.softness;
  return s.density * std::clamp(ramp, 0.0, 1.0);
}

}  // namespace

double AnalyticScene::density(const Vec3& x) const {
  double sum = 0.0;
  for (const auto& s : spheres_) sum += sphere_density(s, x);
  return sum;
}

Vec3 AnalyticScene::color(const Vec3& x) const {
  double total = 0.0;
  Vec3 mix = Vec3::Zero();
  for (const auto& s : spheres_) {
    const double d = sphere_density(s, x);
    total += d;
    mix += d * s.color;
  }
  return total > 0.0 ? Vec3(mix / total) : Vec3::Zero();
}

SceneRecipe parse_scene_recipe(std::string_view name) {
  if (name == "empty") return SceneRecipe::kEmpty;
  if (name == "sphere") return SceneRecipe::kSphere;
  if (name == "spheres") return SceneRecipe::kSpheres;
  if (name == "large") return SceneRecipe::kLarge;
  throw PreconditionError("unknown scene recipe '" + std::string(name) +
                          "' (expected empty, sphere, spheres or large)");
}

std::string_view scene_recipe_name(SceneRecipe recipe) {
  switch (recipe) {
    case SceneRecipe::kEmpty: return "empty";
    case SceneRecipe::kSphere: return "sphere";
    case SceneRecipe::kSpheres: return "spheres";
    case SceneRecipe::kLarge: return "large";
  }
  return "unknown";
}

AnalyticScene make_scene(SceneRecipe recipe) {
  // Colors are multiples of 1/255 so flat regions survive 8-bit quantization.
  const Vec3 red(204 / 255.0, 51 / 255.0, 51 / 255.0);
  const Vec3 green(51 / 255.0, 178 / 255.0, 76 / 255.0);
  const Vec3 blue(38 / 255.0, 76 / 255.0, 204 / 255.0);
  using Spheres = std::vector<SoftSphere>;
  switch (recipe) {
    case SceneRecipe::kEmpty:
      return AnalyticScene(Spheres{});
    case SceneRecipe::kSphere:
      return AnalyticScene(Spheres{{Vec3::Zero(), 0.5, 0.1, 50.0, red}});
    case SceneRecipe::kSpheres:
      return AnalyticScene(Spheres{{Vec3(-0.4, -0.1, 0.15), 0.35, 0.1, 40.0, red},
                                   {Vec3(0.4, 0.05, 0.2), 0.3, 0.1, 40.0, green},
                                   {Vec3(0.05, 0.15, -0.45), 0.3, 0.1, 40.0, blue}});
    case SceneRecipe::kLarge:
      return AnalyticScene(Spheres{{Vec3::Zero(), 0.8, 0.1, 50.0, red}});
  }
  throw PreconditionError("unknown scene recipe");
}

std::vector<CameraPose> ring_poses(const SyntheticOptions& options) {
  if (options.n_views < 1) throw PreconditionError("need at least one view");
  if (options.height < 1 || options.width < 1) throw PreconditionError("resolution must be positive");
  Intrinsics k;
  k.width = options.width;
  k.height = options.height;
  const double half = std::tan(options.fov_deg * std::numbers::pi / 360.0);
  k.fx = 0.5 * options.width / half;
  k.fy = k.fx;
  k.cx = 0.5 * options.width;
  k.cy = 0.5 * options.height;

  Rng rng(hash_combine(options.seed, 0x7269u));
  const double step = 2.0 * std::numbers::pi / options.n_views;
  const double offset = rng.uniform() * step;
  const double elevation = options.elevation_deg * std::numbers::pi / 180.0;
  std::vector<CameraPose> poses;
  for (int i = 0; i < options.n_views; ++i) {
    const double az = offset + i * step;
    const Vec3 eye = options.ring_radius * Vec3(std::cos(elevation) * std::cos(az),
                                                std::sin(elevation),
                                                std::cos(elevation) * std::sin(az));
    poses.push_back(CameraPose::look_at(eye, Vec3::Zero(), Vec3::UnitY(), k));
  }
  return poses;
}

std::pair<AnalyticScene, EditDataset> generate_synthetic_scene(SceneRecipe recipe,
                                                               const SyntheticOptions& options) {
  AnalyticScene scene = make_scene(recipe);
  const auto poses = ring_poses(options);
  RenderOptions ropts;
  ropts.n_samples = options.n_samples;
  ropts.background = options.background;
  ropts.strategy = SamplingStrategy::kUniform;
  ropts.seed = options.seed;
  EditDataset dataset;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    View v;
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03zu", i);
    v.name = name;
    v.pose = poses[i];
    v.original = quantize_8bit(render_field(poses[i], ropts, scene));
    v.current = v.original;
    dataset.views.push_back(std::move(v));
  }
  return {std::move(scene), std::move(dataset)};
}

}  // namespace dualfield
