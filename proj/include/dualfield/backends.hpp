// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dualfield/image.hpp"

namespace dualfield {

/// Parameters handed to a 2D editor. Guidance weights only matter to the
/// remote diffusion editor; synthetic editors ignore them.
struct EditorConfig {
  std::string prompt;
  double s_image = 1.5;
  double s_text = 7.5;
  int steps = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BackendInfo {
  std::string name;
  bool deterministic = true;
};

class EditorBackend {
 public:
  virtual ~EditorBackend() = default;
  virtual BackendInfo info() const = 0;
  /// Returns an image with the resolution of `original`. Throws
  /// PreconditionError when original and render differ in shape.
  virtual Image edit(const Image& original, const Image& render,
                     const EditorConfig& config) const = 0;
};

using Embedding = std::vector<double>;

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual BackendInfo info() const = 0;
  virtual Embedding embed_image(const Image& image) const = 0;
  /// Throws PreconditionError on empty text.
  virtual Embedding embed_text(std::string_view text) const = 0;
};

/// Color edit applied by the oracle editor: inside `mask`, a pixel p becomes
/// max(p) * tint, otherwise it is left alone. With source_hue set, the mask
/// selects pixels whose rgb direction is close to that hue; otherwise it is the
/// whole image. Both the edit and the mask are invariant to scaling p, so the
/// same edit applied to every view stays multi-view consistent.
struct OracleTransform {
  bool identity = false;
  bool has_source = false;
  Vec3 source_hue = Vec3::Zero();
  Vec3 tint = Vec3::Ones();
  Mat3 mix = Mat3::Identity();
  bool use_mix = false;

  static OracleTransform from_prompt(std::string_view prompt);
  Vec3 apply(const Vec3& pixel) const;
};

/// Deterministic multi-view consistent editor: a fixed color transform of the
/// original image. The render is ignored.
class OracleEditor final : public EditorBackend {
 public:
  BackendInfo info() const override { return {"synthetic-oracle", true}; }
  Image edit(const Image& original, const Image& render,
             const EditorConfig& config) const override;
};

/// Returns the original unchanged for every prompt.
class IdentityEditor final : public EditorBackend {
 public:
  BackendInfo info() const override { return {"synthetic-identity", true}; }
  Image edit(const Image& original, const Image& render,
             const EditorConfig& config) const override;
};

/// Models an editor that reinforces what it is shown: it applies the oracle
/// edit only while the render is close to the original (mean absolute
/// difference below `threshold`) and otherwise hands the render back.
class StickyEditor final : public EditorBackend {
 public:
  explicit StickyEditor(double threshold = 0.05) : threshold_(threshold) {}
  BackendInfo info() const override { return {"synthetic-sticky", true}; }
  Image edit(const Image& original, const Image& render,
             const EditorConfig& config) const override;
  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
  OracleEditor oracle_;
};

/// 27-dim deterministic embedder. Images map to per-channel 8-bin histograms
/// (fractions of pixels) followed by the mean color; text maps to a unit
/// vector expanded from a 64-bit hash of the string.
class ToyEmbedder final : public EmbeddingBackend {
 public:
  static constexpr int kDim = 27;
  BackendInfo info() const override { return {"toy", true}; }
  Embedding embed_image(const Image& image) const override;
  Embedding embed_text(std::string_view text) const override;
};

/// Raw cosine similarity. Throws ScoringError for a zero-norm input and
/// ContractError for mismatched dimensions.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
/// (cos + 1) / 2, in [0,1].
double normalized_cosine(std::span<const double> a, std::span<const double> b);

/// S = ncos(E(edited), E(original)) * ncos(E(edited), E_text(prompt)).
double consistency_score(const Image& edited, const Image& original,
                         const EditorConfig& config, const EmbeddingBackend& embedder);
double consistency_score(std::span<const double> edited, std::span<const double> original,
                         std::span<const double> prompt);

/// Backend factories. Known editors: synthetic-oracle, synthetic-sticky,
/// synthetic-identity, http. Known embedders: toy, http.
struct BackendSettings {
  std::string editor = "synthetic-oracle";
  std::string embedder = "toy";
  std::string endpoint = "http://localhost:8191";
  double sticky_threshold = 0.05;
  double timeout_seconds = 120.0;
};

std::unique_ptr<EditorBackend> make_editor(const BackendSettings& settings);
std::unique_ptr<EmbeddingBackend> make_embedder(const BackendSettings& settings);

}  // namespace dualfield
