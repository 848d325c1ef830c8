// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "dualfield/camera.hpp"
#include "dualfield/dataset.hpp"
#include "dualfield/field.hpp"
#include "dualfield/renderer.hpp"
#include "dualfield/rng.hpp"

namespace dualfield {

/// One supervised ray. `ray` is the unclipped camera ray.
struct TrainingRay {
  Ray ray;
  std::size_t view = 0;
  Vec3 target = Vec3::Zero();
  double weight = 1.0;
};

struct RayBatch {
  std::vector<TrainingRay> rays;
};

/// sum_b weight_b * ||predicted_b - target_b||^2.
double rgb_loss(std::span<const Vec3> predicted, std::span<const Vec3> target,
                std::span<const double> weight);

/// S_i / mean(S) over the views that have a score; unscored views get weight 1.
/// Identical scores yield exactly 1. Throws NormalizationError when no scored
/// view is positive, PreconditionError on negative scores.
std::vector<double> compute_normalized_weights(std::span<const std::optional<double>> scores);

enum class TrainedField { kStatic, kDynamic };

struct BackwardOptions {
  int n_samples = 64;
  SamplingStrategy strategy = SamplingStrategy::kUniform;
  Vec3 background = Vec3::Zero();
  RayOptions rays;
  /// Which grid receives gradients; the other one is held fixed.
  TrainedField field = TrainedField::kDynamic;
  /// Retreat scaler applied to the blend weights while training (1 = latest model).
  double gamma = 1.0;
  std::uint64_t seed = 0;
  /// Sequential, fixed-order accumulation. Otherwise rays are split across
  /// `threads` workers whose partial sums are reduced in worker order.
  bool deterministic = true;
  int threads = 0;
};

/// Flat gradient with the layout of FeatureGrid::parameters().
struct GridGradient {
  std::vector<double> values;
  std::size_t vertex_count = 0;

  std::span<const double> density() const {
    return std::span<const double>(values).first(vertex_count);
  }
  std::span<const double> color() const {
    return std::span<const double>(values).subspan(vertex_count);
  }
};

struct BackwardResult {
  double loss = 0.0;
  GridGradient grads;
  std::vector<Vec3> predicted;
};

/// Renders every ray of the batch, evaluates rgb_loss and returns the exact
/// gradient with respect to the selected grid's features.
BackwardResult backward(const DualFieldModel& model, const RayBatch& batch,
                        const BackwardOptions& opts);

struct AdamHyperparameters {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  AdamHyperparameters hyper;

  OptimizerState() = default;
  OptimizerState(std::size_t size, AdamHyperparameters h)
      : first_moment(size, 0.0), second_moment(size, 0.0), hyper(h) {}
};

/// Bias-corrected Adam on float parameters. Throws ContractError on size mismatch.
void adam_step(std::span<float> params, std::span<const double> grads, OptimizerState& state);

/// Append-only CSV with columns iteration,loss,w_sigma,w_c,gamma_used,temperature.
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(const std::filesystem::path& path);
  void append(std::int64_t iteration, double loss, double w_sigma, double w_c,
              double gamma_used, double temperature);
  void flush() { out_.flush(); }
  bool is_open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
};

/// Precomputed camera rays for every pixel of every view.
class RayTable {
 public:
  RayTable() = default;
  RayTable(const EditDataset& dataset, const RayOptions& opts);

  const Ray& ray(std::size_t view, std::size_t pixel) const {
    return rays_[view * pixels_per_view_ + pixel];
  }
  std::size_t pixels_per_view() const noexcept { return pixels_per_view_; }

 private:
  std::vector<Ray> rays_;
  std::size_t pixels_per_view_ = 0;
};

enum class ImageSource { kOriginal, kCurrent };

/// Draws `batch_size` (view, pixel) pairs uniformly over the dataset. Targets
/// come from the original or the current images; `view_weights` (one per
/// view) become the per-ray loss weights.
RayBatch sample_batch(const EditDataset& dataset, const RayTable& table, int batch_size,
                      std::span<const double> view_weights, Rng& rng,
                      ImageSource source = ImageSource::kCurrent);

struct TrainConfig {
  int iterations = 2000;
  int batch_size = 1024;
  int n_samples = 64;
  SamplingStrategy strategy = SamplingStrategy::kUniform;
  AdamHyperparameters adam;
  GridResolution resolution;
  float density_init = 0.0f;
  Vec3 background = Vec3::Zero();
  RayOptions rays;
  std::uint64_t seed = 0;
  bool deterministic = true;
  int threads = 0;
};

/// Fits the static grid to the original images with the unweighted loss.
/// The returned model has a zero dynamic grid and its blend schedule at t = 0.
DualFieldModel train_static(const EditDataset& dataset, const TrainConfig& config,
                            TrainLog* log = nullptr);

}  // namespace dualfield
