// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dualfield/image.hpp"

namespace dualfield {

struct GridResolution {
  int nx = 32;
  int ny = 32;
  int nz = 32;

  std::size_t vertex_count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const GridResolution&) const = default;
};

/// Pre-activation hidden features at one point: 1 density + 3 color values.
struct HiddenFeatures {
  double density = 0.0;
  Vec3 color = Vec3::Zero();
};

/// Decoded radiance: nonnegative density and rgb in (0,1).
struct Radiance {
  double sigma = 0.0;
  Vec3 rgb = Vec3::Zero();
};

/// The 8 vertex indices and trilinear weights surrounding a point.
struct TrilinearStencil {
  std::array<std::uint32_t, 8> index{};
  std::array<double, 8> weight{};
};

/// Dense lattice of learnable hidden features over the cube [-1,1]^3.
///
/// Parameters live in one contiguous float buffer: the density block (one
/// value per vertex) followed by the color block (three per vertex). Vertices
/// are ordered x-major: index = (ix * ny + iy) * nz + iz.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  explicit FeatureGrid(GridResolution res, float density_init = 0.0f,
                       float color_init = 0.0f);

  const GridResolution& resolution() const noexcept { return res_; }
  std::size_t vertex_count() const noexcept { return res_.vertex_count(); }

  std::size_t vertex_index(int ix, int iy, int iz) const noexcept {
    return (static_cast<std::size_t>(ix) * static_cast<std::size_t>(res_.ny) +
            static_cast<std::size_t>(iy)) * static_cast<std::size_t>(res_.nz) +
           static_cast<std::size_t>(iz);
  }
  /// World position of a lattice vertex.
  Vec3 vertex_position(int ix, int iy, int iz) const;

  std::span<float> parameters() noexcept { return params_; }
  std::span<const float> parameters() const noexcept { return params_; }
  std::span<float> density() noexcept { return parameters().first(vertex_count()); }
  std::span<const float> density() const noexcept {
    return parameters().first(vertex_count());
  }
  std::span<float> color() noexcept { return parameters().subspan(vertex_count()); }
  std::span<const float> color() const noexcept {
    return parameters().subspan(vertex_count());
  }

  bool all_finite() const;
  bool operator==(const FeatureGrid&) const = default;

 private:
  GridResolution res_;
  std::vector<float> params_;
};

/// Throws PreconditionError if `x` lies outside [-1,1]^3.
TrilinearStencil trilinear_stencil(const GridResolution& res, const Vec3& x);

HiddenFeatures sample_features(const FeatureGrid& grid, const TrilinearStencil& stencil);
HiddenFeatures sample_features(const FeatureGrid& grid, const Vec3& x);

/// w_max * tanh(lambda * t).
double blend_weight(double t, double w_max, double lambda);

/// (1 - w) * a + w * b elementwise. Throws ContractError on length mismatch.
std::vector<double> fuse(std::span<const double> a, std::span<const double> b, double w);
/// Density fused with w_sigma and color with w_color.
HiddenFeatures fuse(const HiddenFeatures& fixed, const HiddenFeatures& moving,
                    double w_sigma, double w_color);

inline constexpr double kDensityClamp = 15.0;

/// sigma = exp(clamp(h_sigma, -15, 15)), rgb = sigmoid(h_c).
Radiance decode(const HiddenFeatures& h);

/// Blend schedule and the retreat scaler for the current model.
struct BlendState {
  double w_max_sigma = 0.1;
  double w_max_color = 0.1;
  double lambda = 0.005;
  std::int64_t t = 0;
  double gamma = 1.0;

  double w_sigma() const { return blend_weight(static_cast<double>(t), w_max_sigma, lambda); }
  double w_color() const { return blend_weight(static_cast<double>(t), w_max_color, lambda); }
  void validate() const;
  bool operator==(const BlendState&) const = default;
};

/// Frozen static field plus trainable dynamic field, fused at the hidden-feature level.
struct DualFieldModel {
  FeatureGrid static_field;
  FeatureGrid dynamic_field;
  BlendState blend;

  DualFieldModel() = default;
  DualFieldModel(GridResolution res, float density_init = 0.0f);

  /// Effective blend weights (gamma * w_sigma, gamma * w_color).
  std::pair<double, double> effective_weights(double gamma) const;

  Radiance query(const Vec3& x, double gamma) const;
  Radiance query(const TrilinearStencil& stencil, double gamma) const;
  /// Query with precomputed effective weights.
  Radiance query_weighted(const TrilinearStencil& stencil, double w_sigma, double w_color) const;
  /// Decoded static field only, as if the dynamic field did not exist.
  Radiance query_static(const Vec3& x) const;

  void validate() const;
  bool operator==(const DualFieldModel&) const = default;
};

}  // namespace dualfield
