// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "dualfield/backends.hpp"
#include "dualfield/field.hpp"
#include "dualfield/idu.hpp"
#include "dualfield/trainer.hpp"

namespace dualfield {

/// Every tunable of a run. Members are grouped by the TOML section they load
/// from; top-level keys have no prefix.
struct RunConfig {
  std::uint64_t seed = 0;
  bool deterministic = true;
  int threads = 0;

  // [field]
  int field_resolution = 32;
  double field_density_init = 0.0;
  double field_w_max_sigma = 0.1;
  double field_w_max_color = 0.1;
  double field_lambda = 0.005;

  // [trainer]
  int trainer_iterations = 2000;
  int trainer_batch_size = 1024;
  int trainer_n_samples = 64;
  std::string trainer_strategy = "uniform";
  double trainer_lr = 1e-2;
  double trainer_beta1 = 0.9;
  double trainer_beta2 = 0.999;
  double trainer_eps = 1e-8;

  // [idu]
  int idu_d = 1;
  int idu_n = 10;
  std::int64_t idu_total_iterations = 15000;
  double idu_t0 = 1.0;
  bool idu_sa = true;
  bool idu_cci = true;
  std::string idu_prompt;
  double idu_s_image = 1.5;
  double idu_s_text = 7.5;
  int idu_steps = 20;
  int idu_checkpoint_every = 100;

  // [renderer]
  int renderer_n_samples = 64;
  double renderer_near = 0.05;
  double renderer_far = 10.0;
  double renderer_background_r = 0.0;
  double renderer_background_g = 0.0;
  double renderer_background_b = 0.0;

  // [backend]
  std::string backend_editor = "synthetic-oracle";
  std::string backend_embedder = "toy";
  std::string backend_endpoint = "http://localhost:8191";
  double backend_sticky_threshold = 0.05;
  double backend_timeout = 120.0;

  /// Defaults sized for the original experiments rather than a desk CPU.
  static RunConfig paper_scale();

  void validate() const;

  Vec3 background() const;
  RayOptions rays() const;
  TrainConfig train_config() const;
  IDUConfig idu_config() const;
  BlendState blend_state() const;
  BackendSettings backend_settings() const;
};

/// Applies a TOML document with [field], [trainer], [idu], [renderer] and
/// [backend] sections. Supported values: integers, floats, booleans, basic
/// strings. Unknown keys and type mismatches throw ConfigError. Returns the
/// dotted names of the keys it set.
std::set<std::string> apply_toml(RunConfig& config, std::string_view text);
std::set<std::string> apply_toml_file(RunConfig& config, const std::filesystem::path& path);

/// Sets one key ("section.key" or a top-level key) from its TOML value text.
void apply_override(RunConfig& config, std::string_view dotted_key, std::string_view value);

/// Canonical TOML dump: fixed key order and shortest round-trip numbers, so
/// equal configs print identical bytes and the output parses back unchanged.
std::string print_config(const RunConfig& config);

}  // namespace dualfield
