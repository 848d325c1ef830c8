// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dualfield/errors.hpp"

namespace dualfield {

RaySamples sample_along_ray(const Ray& ray, int n, SamplingStrategy strategy, Rng& rng) {
  if (n < 1) throw PreconditionError("sample_along_ray: need at least one sample");
  if (!(ray.far > ray.near)) throw PreconditionError("sample_along_ray: far must exceed near");
  const double width = (ray.far - ray.near) / n;
  RaySamples s;
  s.ts.resize(static_cast<std::size_t>(n));
  s.deltas.resize(static_cast<std::size_t>(n));
  s.positions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double jitter = strategy == SamplingStrategy::kUniform ? 0.5 : rng.uniform();
    s.ts[i] = ray.near + (i + jitter) * width;
  }
  for (int i = 0; i < n; ++i) {
    s.deltas[i] = i + 1 < n ? s.ts[i + 1] - s.ts[i] : width;
    s.positions[i] = ray.at(s.ts[i]);
  }
  // Stratified neighbours can coincide only in degenerate floating-point cases.
  for (double& d : s.deltas) d = std::max(d, 1e-12);
  return s;
}

CompositeResult composite(std::span<const double> sigmas, std::span<const Vec3> colors,
                          std::span<const double> deltas, const Vec3& background) {
  const std::size_t n = sigmas.size();
  if (colors.size() != n || deltas.size() != n) {
    throw ContractError("composite: sigmas, colors and deltas differ in length");
  }
  CompositeResult out;
  out.weights.resize(n);
  out.transmittances.resize(n);
  double optical_depth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigmas[i] >= 0.0)) throw ContractError("composite: negative density");
    if (!(deltas[i] > 0.0)) throw ContractError("composite: nonpositive sample spacing");
    const double t_i = std::exp(-optical_depth);
    optical_depth += sigmas[i] * deltas[i];
    const double w = t_i - std::exp(-optical_depth);
    out.transmittances[i] = t_i;
    out.weights[i] = w;
    out.color += w * colors[i];
  }
  out.residual_transmittance = std::exp(-optical_depth);
  out.color += out.residual_transmittance * background;
  return out;
}

CompositeGradient composite_backward(std::span<const double> sigmas,
                                     std::span<const Vec3> colors,
                                     std::span<const double> deltas, const Vec3& background,
                                     const Vec3& d_color_out) {
  const CompositeResult fwd = composite(sigmas, colors, deltas, background);
  const std::size_t n = sigmas.size();
  CompositeGradient g;
  g.d_sigma.resize(n);
  g.d_color.resize(n);
  // suffix = sum_{i>k} w_i c_i + T_{N+1} bg, accumulated back to front.
  Vec3 suffix = fwd.residual_transmittance * background;
  for (std::size_t k = n; k-- > 0;) {
    const double t_next = fwd.transmittances[k] - fwd.weights[k];
    g.d_color[k] = fwd.weights[k] * d_color_out;
    g.d_sigma[k] = deltas[k] * d_color_out.dot(t_next * colors[k] - suffix);
    suffix += fwd.weights[k] * colors[k];
  }
  return g;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

Image render_image(const DualFieldModel& model, const CameraPose& pose,
                   const RenderOptions& opts) {
  const auto [ws, wc] = model.effective_weights(opts.gamma);
  const GridResolution res = model.static_field.resolution();
  return render_field(pose, opts, [&, ws = ws, wc = wc](const Vec3& x) {
    return model.query_weighted(trilinear_stencil(res, x), ws, wc);
  });
}

Image render_static_only(const DualFieldModel& model, const CameraPose& pose,
                         const RenderOptions& opts) {
  return render_field(pose, opts, [&](const Vec3& x) { return model.query_static(x); });
}

}  // namespace dualfield
