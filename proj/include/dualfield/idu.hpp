// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "dualfield/backends.hpp"
#include "dualfield/dataset.hpp"
#include "dualfield/field.hpp"
#include "dualfield/rng.hpp"
#include "dualfield/trainer.hpp"

namespace dualfield {

/// T0 / log10(10 + t).
double sa_temperature(double t, double T0);

/// Acceptance probability of rendering from a model retreated by `gamma`.
inline double sa_acceptance_probability(double gamma, double temperature) {
  return std::exp((gamma - 1.0) / temperature);
}

/// Bernoulli acceptance of a pinned candidate using one uniform draw `u`.
bool sa_accept(double gamma, double temperature, double u);

struct SAState {
  double T0 = 1.0;
  std::int64_t t = 0;  // mirrors BlendState::t
  Rng rng{0};

  double temperature() const { return sa_temperature(static_cast<double>(t), T0); }
};

/// Draws a candidate gamma ~ U[0,1) and accepts it with probability
/// exp((gamma - 1) / T_t); on rejection the latest model (1.0) is used.
double sa_draw_gamma(SAState& sa);

struct IDUConfig {
  int d = 1;
  int n = 10;
  std::int64_t total_iterations = 15000;
  bool sa_enabled = true;
  bool cci_enabled = true;
  double T0 = 1.0;
  EditorConfig editor;
  int batch_size = 1024;
  int n_samples = 64;
  /// Samples per ray for the dataset-update renders.
  int render_samples = 64;
  SamplingStrategy strategy = SamplingStrategy::kUniform;
  Vec3 background = Vec3::Zero();
  RayOptions rays;
  AdamHyperparameters adam;
  std::uint64_t seed = 0;
  bool deterministic = true;
  int threads = 0;
  /// Rounds between periodic checkpoints (0 disables them).
  int checkpoint_every = 100;

  void validate() const;
};

/// Everything an edit run mutates. Copyable, which is how rounds stay atomic.
struct EditSession {
  DualFieldModel model;
  EditDataset dataset;
  SAState sa;
  OptimizerState optimizer;
  Rng batch_rng{0};
  std::int64_t rounds_done = 0;
  std::shared_ptr<const RayTable> ray_table;

  /// Fresh session for a trained static model: zero dynamic grid, t = 0.
  static EditSession start(DualFieldModel model, EditDataset dataset, const IDUConfig& config);
};

struct ViewUpdate {
  std::size_t view = 0;
  double gamma = 1.0;
  bool retreated = false;
  double w_sigma_used = 0.0;  // gamma * w_sigma
  double w_color_used = 0.0;
  std::optional<double> score;
};

struct RoundTrace {
  std::int64_t round = 0;
  std::int64_t t_start = 0;
  double temperature = 0.0;
  double w_sigma = 0.0;
  double w_color = 0.0;
  std::vector<ViewUpdate> updates;
  std::vector<double> view_weights;
  double mean_loss = 0.0;
};

struct Backends {
  const EditorBackend* editor = nullptr;
  const EmbeddingBackend* embedder = nullptr;  // required when CCI is on
};

/// One dataset update of d views followed by n training iterations of the
/// dynamic grid. Backend failures throw BackendError carrying the view index
/// and leave `session` untouched.
RoundTrace idu_round(EditSession& session, const IDUConfig& config, const Backends& backends,
                     TrainLog* log = nullptr);

struct RunEditOptions {
  /// Directory for checkpoints (edit.ckpt, edit.state); empty disables them.
  std::filesystem::path checkpoint_dir;
  TrainLog* log = nullptr;
  std::function<void(const RoundTrace&)> on_round;
};

/// Runs ceil(total_iterations / n) rounds minus those already done.
std::vector<RoundTrace> run_edit(EditSession& session, const IDUConfig& config,
                                 const Backends& backends, const RunEditOptions& options = {});

/// Resume state beside the checkpoint: round counter, cursor, RNG states,
/// optimizer moments, current images and cached scores.
void save_session_state(const std::filesystem::path& path, const EditSession& session);
/// Restores a session saved by save_session_state onto `session`, whose
/// model and dataset originals must already be loaded.
void load_session_state(const std::filesystem::path& path, EditSession& session);

/// Appends RoundTrace rows to a CSV (one row per updated view).
class RoundLog {
 public:
  explicit RoundLog(const std::filesystem::path& path);
  void append(const RoundTrace& trace);

 private:
  std::ofstream out_;
};

}  // namespace dualfield
