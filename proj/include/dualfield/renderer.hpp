// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dualfield/camera.hpp"
#include "dualfield/field.hpp"
#include "dualfield/image.hpp"
#include "dualfield/rng.hpp"

namespace dualfield {

enum class SamplingStrategy { kUniform, kStratified };

/// Sample points x_i = o + t_i d with spacing delta_i = t_{i+1} - t_i.
struct RaySamples {
  std::vector<double> ts;
  std::vector<double> deltas;
  std::vector<Vec3> positions;

  std::size_t size() const noexcept { return ts.size(); }
};

/// Uniform takes bin midpoints, stratified draws one point per bin. The last
/// delta is the bin width (far - near) / n.
RaySamples sample_along_ray(const Ray& ray, int n, SamplingStrategy strategy, Rng& rng);

struct CompositeResult {
  Vec3 color = Vec3::Zero();
  std::vector<double> weights;
  std::vector<double> transmittances;
  double residual_transmittance = 1.0;
};

/// Alpha compositing: T_i = exp(-sum_{j<i} delta_j sigma_j),
/// w_i = T_i (1 - exp(-delta_i sigma_i)), color = sum w_i c_i + T_{N+1} bg.
CompositeResult composite(std::span<const double> sigmas, std::span<const Vec3> colors,
                          std::span<const double> deltas, const Vec3& background);

struct CompositeGradient {
  std::vector<double> d_sigma;
  std::vector<Vec3> d_color;
};

/// Vector-Jacobian product of composite() given dL/dcolor.
CompositeGradient composite_backward(std::span<const double> sigmas,
                                     std::span<const Vec3> colors,
                                     std::span<const double> deltas,
                                     const Vec3& background, const Vec3& d_color_out);

struct RenderOptions {
  int n_samples = 128;
  double gamma = 1.0;
  Vec3 background = Vec3::Zero();
  std::uint64_t seed = 0;
  SamplingStrategy strategy = SamplingStrategy::kUniform;
  RayOptions rays;
  /// 0 picks std::thread::hardware_concurrency().
  int threads = 0;
};

/// Stream for one pixel, independent of scheduling.
inline Rng pixel_rng(std::uint64_t seed, int row, int col) {
  return Rng(hash_combine(hash_combine(seed, static_cast<std::uint64_t>(row)),
                          static_cast<std::uint64_t>(col)));
}

/// Runs `body(begin, end)` over [0, count) split into contiguous chunks.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Renders a single ray through any field callable `field(const Vec3&) -> Radiance`.
template <class Field>
Vec3 render_ray(const Ray& ray, const Field& field, const RenderOptions& opts, Rng& rng) {
  const auto clipped = clip_to_bounds(ray, opts.rays);
  if (!clipped) return opts.background;
  const RaySamples samples = sample_along_ray(*clipped, opts.n_samples, opts.strategy, rng);
  std::vector<double> sigmas(samples.size());
  std::vector<Vec3> colors(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Radiance r = field(opts.rays.bounds.lo.cwiseMax(
        samples.positions[i].cwiseMin(opts.rays.bounds.hi)));
    sigmas[i] = r.sigma;
    colors[i] = r.rgb;
  }
  return composite(sigmas, colors, samples.deltas, opts.background).color;
}

template <class Field>
Image render_field(const CameraPose& pose, const RenderOptions& opts, const Field& field) {
  pose.validate();
  const int h = pose.intrinsics.height;
  const int w = pose.intrinsics.width;
  Image image(h, w);
  parallel_for(static_cast<std::size_t>(h), opts.threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t r = begin; r < end; ++r) {
                   const int row = static_cast<int>(r);
                   for (int col = 0; col < w; ++col) {
                     Rng rng = pixel_rng(opts.seed, row, col);
                     image.set_rgb(row, col,
                                   render_ray(generate_ray(pose, row, col, opts.rays),
                                              field, opts, rng));
                   }
                 }
               });
  return image;
}

/// Renders the fused model with blend weights scaled by opts.gamma.
Image render_image(const DualFieldModel& model, const CameraPose& pose,
                   const RenderOptions& opts);
/// Renders the decoded static field on its own.
Image render_static_only(const DualFieldModel& model, const CameraPose& pose,
                         const RenderOptions& opts);

}  // namespace dualfield
