// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dualfield/errors.hpp"

namespace dualfield {

FeatureGrid::FeatureGrid(GridResolution res, float density_init, float color_init)
    : res_(res) {
  if (res.nx < 2 || res.ny < 2 || res.nz < 2) {
    throw PreconditionError("grid resolution must be at least 2 per axis");
  }
  params_.assign(res.vertex_count() * 4, color_init);
  std::fill_n(params_.begin(), res.vertex_count(), density_init);
}

Vec3 FeatureGrid::vertex_position(int ix, int iy, int iz) const {
  return {-1.0 + 2.0 * ix / (res_.nx - 1), -1.0 + 2.0 * iy / (res_.ny - 1),
          -1.0 + 2.0 * iz / (res_.nz - 1)};
}

bool FeatureGrid::all_finite() const {
  return std::all_of(params_.begin(), params_.end(), [](float v) { return std::isfinite(v); });
}

TrilinearStencil trilinear_stencil(const GridResolution& res, const Vec3& x) {
  const int n[3] = {res.nx, res.ny, res.nz};
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    if (!(x[a] >= -1.0 && x[a] <= 1.0)) {
      throw PreconditionError("sample point outside the [-1,1]^3 domain (axis " +
                              std::to_string(a) + " = " + std::to_string(x[a]) + ")");
    }
    const double u = (x[a] + 1.0) * 0.5 * (n[a] - 1);
    const int i = std::min(static_cast<int>(u), n[a] - 2);
    i0[a] = i;
    f[a] = u - i;
  }
  TrilinearStencil s;
  const std::uint32_t sy = static_cast<std::uint32_t>(res.nz);
  const std::uint32_t sx = static_cast<std::uint32_t>(res.ny) * sy;
  const std::uint32_t base = static_cast<std::uint32_t>(i0[0]) * sx +
                             static_cast<std::uint32_t>(i0[1]) * sy +
                             static_cast<std::uint32_t>(i0[2]);
  int k = 0;
  for (int dx = 0; dx < 2; ++dx) {
    const double wx = dx ? f[0] : 1.0 - f[0];
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? f[1] : 1.0 - f[1];
      for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? f[2] : 1.0 - f[2];
        s.index[k] = base + dx * sx + dy * sy + dz;
        s.weight[k] = wx * wy * wz;
        ++k;
      }
    }
  }
  return s;
}

HiddenFeatures sample_features(const FeatureGrid& grid, const TrilinearStencil& stencil) {
  const float* density = grid.density().data();
  const float* color = grid.color().data();
  HiddenFeatures h;
  double r = 0.0, g = 0.0, b = 0.0;
  for (int k = 0; k < 8; ++k) {
    const std::size_t i = stencil.index[k];
    const double w = stencil.weight[k];
    h.density += w * density[i];
    r += w * color[3 * i];
    g += w * color[3 * i + 1];
    b += w * color[3 * i + 2];
  }
  h.color = Vec3(r, g, b);
  return h;
}

HiddenFeatures sample_features(const FeatureGrid& grid, const Vec3& x) {
  return sample_features(grid, trilinear_stencil(grid.resolution(), x));
}

double blend_weight(double t, double w_max, double lambda) {
  if (!(t >= 0.0)) throw PreconditionError("blend_weight: t must be nonnegative");
  if (!(w_max >= 0.0 && w_max <= 1.0)) throw PreconditionError("blend_weight: w_max outside [0,1]");
  if (!(lambda > 0.0)) throw PreconditionError("blend_weight: lambda must be positive");
  return w_max * std::tanh(lambda * t);
}

std::vector<double> fuse(std::span<const double> a, std::span<const double> b, double w) {
  if (a.size() != b.size()) throw ContractError("fuse: feature dimensions differ");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
  return out;
}

HiddenFeatures fuse(const HiddenFeatures& fixed, const HiddenFeatures& moving, double w_sigma,
                    double w_color) {
  HiddenFeatures out;
  out.density = (1.0 - w_sigma) * fixed.density + w_sigma * moving.density;
  out.color = (1.0 - w_color) * fixed.color + w_color * moving.color;
  return out;
}

Radiance decode(const HiddenFeatures& h) {
  Radiance r;
  r.sigma = std::exp(std::clamp(h.density, -kDensityClamp, kDensityClamp));
  for (int c = 0; c < 3; ++c) r.rgb[c] = 1.0 / (1.0 + std::exp(-h.color[c]));
  return r;
}

void BlendState::validate() const {
  if (!(w_max_sigma >= 0.0 && w_max_sigma <= 1.0) || !(w_max_color >= 0.0 && w_max_color <= 1.0)) {
    throw PreconditionError("blend upper bounds must lie in [0,1]");
  }
  if (!(lambda > 0.0)) throw PreconditionError("blend growth rate must be positive");
  if (t < 0) throw PreconditionError("iteration counter must be nonnegative");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw PreconditionError("gamma must lie in [0,1]");
}

DualFieldModel::DualFieldModel(GridResolution res, float density_init)
    : static_field(res, density_init), dynamic_field(res, 0.0f) {}

std::pair<double, double> DualFieldModel::effective_weights(double gamma) const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw PreconditionError("gamma must lie in [0,1]");
  return {gamma * blend.w_sigma(), gamma * blend.w_color()};
}

Radiance DualFieldModel::query_weighted(const TrilinearStencil& stencil, double w_sigma,
                                        double w_color) const {
  const HiddenFeatures hs = sample_features(static_field, stencil);
  const HiddenFeatures hd = sample_features(dynamic_field, stencil);
  return decode(fuse(hs, hd, w_sigma, w_color));
}

Radiance DualFieldModel::query(const TrilinearStencil& stencil, double gamma) const {
  const auto [ws, wc] = effective_weights(gamma);
  return query_weighted(stencil, ws, wc);
}

Radiance DualFieldModel::query(const Vec3& x, double gamma) const {
  return query(trilinear_stencil(static_field.resolution(), x), gamma);
}

Radiance DualFieldModel::query_static(const Vec3& x) const {
  return decode(sample_features(static_field, x));
}

void DualFieldModel::validate() const {
  if (!(static_field.resolution() == dynamic_field.resolution())) {
    throw PreconditionError("static and dynamic grids differ in resolution");
  }
  blend.validate();
}

}  // namespace dualfield
