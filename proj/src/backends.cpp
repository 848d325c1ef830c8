// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/backends.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "dualfield/errors.hpp"
#include "dualfield/http_backend.hpp"
#include "dualfield/rng.hpp"

namespace dualfield {
namespace {

constexpr std::array<std::string_view, 12> kPaletteWords = {
    "red", "orange", "yellow", "green", "cyan", "blue",
    "purple", "magenta", "pink", "white", "gray", "grey"};

// Tints have a maximum component of 1.
Vec3 palette_tint(std::string_view word) {
  if (word == "red") return {1.0, 0.15, 0.1};
  if (word == "orange") return {1.0, 0.5, 0.05};
  if (word == "yellow") return {1.0, 0.9, 0.1};
  if (word == "green") return {0.15, 1.0, 0.2};
  if (word == "cyan") return {0.1, 0.9, 1.0};
  if (word == "blue") return {0.15, 0.3, 1.0};
  if (word == "purple") return {0.6, 0.2, 1.0};
  if (word == "magenta") return {1.0, 0.1, 0.9};
  if (word == "pink") return {1.0, 0.5, 0.7};
  if (word == "white") return {1.0, 1.0, 1.0};
  return {0.5, 0.5, 0.5};  // gray / grey
}

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

void require_same_shape(const Image& original, const Image& render) {
  if (!original.same_shape(render)) {
    throw PreconditionError("editor: original and render resolutions differ");
  }
}

}  // namespace

void EditorConfig::validate() const {
  if (!(s_image > 0.0) || !(s_text > 0.0)) {
    throw PreconditionError("guidance weights must be positive");
  }
}

OracleTransform OracleTransform::from_prompt(std::string_view prompt) {
  OracleTransform t;
  const auto words = words_of(prompt);
  if (words.size() == 1 && words.front() == "identity") {
    t.identity = true;
    return t;
  }
  std::vector<std::string_view> colors;
  for (const auto& w : words) {
    const auto it = std::find(kPaletteWords.begin(), kPaletteWords.end(), w);
    if (it != kPaletteWords.end()) colors.push_back(*it);
  }
  if (colors.empty()) {
    // No color named: a prompt-keyed channel permutation (never the identity).
    static constexpr int kPerms[5][3] = {{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    const auto& p = kPerms[fnv1a(prompt) % 5];
    t.use_mix = true;
    t.mix.setZero();
    for (int r = 0; r < 3; ++r) t.mix(r, p[r]) = 1.0;
    return t;
  }
  t.tint = palette_tint(colors.back());
  if (colors.size() >= 2 && colors.front() != colors.back()) {
    t.has_source = true;
    t.source_hue = palette_tint(colors.front()).normalized();
  }
  return t;
}

Vec3 OracleTransform::apply(const Vec3& p) const {
  if (identity) return p;
  if (use_mix) return mix * p;
  const Vec3 target = p.maxCoeff() * tint;
  double m = 1.0;
  if (has_source) {
    const double n = p.norm();
    m = n > 0.0 ? smoothstep(0.85, 0.95, p.dot(source_hue) / n) : 0.0;
  }
  return p + m * (target - p);
}

Image OracleEditor::edit(const Image& original, const Image& render,
                         const EditorConfig& config) const {
  require_same_shape(original, render);
  const OracleTransform transform = OracleTransform::from_prompt(config.prompt);
  if (transform.identity) return original;
  Image out(original.height(), original.width());
  for (int r = 0; r < original.height(); ++r) {
    for (int c = 0; c < original.width(); ++c) {
      out.set_rgb(r, c, transform.apply(original.rgb(r, c)).cwiseMax(0.0).cwiseMin(1.0));
    }
  }
  return out;
}

Image IdentityEditor::edit(const Image& original, const Image& render,
                           const EditorConfig&) const {
  require_same_shape(original, render);
  return original;
}

Image StickyEditor::edit(const Image& original, const Image& render,
                         const EditorConfig& config) const {
  require_same_shape(original, render);
  if (mean_abs_difference(render, original) < threshold_) {
    return oracle_.edit(original, render, config);
  }
  return render;
}

Embedding ToyEmbedder::embed_image(const Image& image) const {
  if (image.empty()) throw PreconditionError("embed_image: empty image");
  Embedding e(kDim, 0.0);
  const double n = static_cast<double>(image.pixel_count());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      const double v = std::clamp(static_cast<double>(image.data()[i * 3 + ch]), 0.0, 1.0);
      const int bin = std::min(static_cast<int>(v * 8.0), 7);
      e[static_cast<std::size_t>(ch * 8 + bin)] += 1.0 / n;
      e[static_cast<std::size_t>(24 + ch)] += v / n;
    }
  }
  return e;
}

Embedding ToyEmbedder::embed_text(std::string_view text) const {
  if (text.empty()) throw PreconditionError("embed_text: empty text");
  const std::uint64_t h = fnv1a(text);
  Embedding e(kDim);
  double norm2 = 0.0;
  for (int i = 0; i < kDim; ++i) {
    const double u = static_cast<double>(mix64(h + static_cast<std::uint64_t>(i)) >> 11) * 0x1.0p-53;
    e[static_cast<std::size_t>(i)] = 2.0 * u - 1.0;
    norm2 += e[static_cast<std::size_t>(i)] * e[static_cast<std::size_t>(i)];
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : e) v *= inv;
  return e;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine: embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw ScoringError("cosine of a zero-norm embedding");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double normalized_cosine(std::span<const double> a, std::span<const double> b) {
  return 0.5 * (cosine_similarity(a, b) + 1.0);
}

double consistency_score(std::span<const double> edited, std::span<const double> original,
                         std::span<const double> prompt) {
  return normalized_cosine(edited, original) * normalized_cosine(edited, prompt);
}

double consistency_score(const Image& edited, const Image& original, const EditorConfig& config,
                         const EmbeddingBackend& embedder) {
  if (!edited.same_shape(original)) {
    throw PreconditionError("consistency_score: image resolutions differ");
  }
  const Embedding e_edit = embedder.embed_image(edited);
  const Embedding e_orig = embedder.embed_image(original);
  const Embedding e_text = embedder.embed_text(config.prompt);
  return consistency_score(e_edit, e_orig, e_text);
}

std::unique_ptr<EditorBackend> make_editor(const BackendSettings& settings) {
  if (settings.editor == "synthetic-oracle") return std::make_unique<OracleEditor>();
  if (settings.editor == "synthetic-identity") return std::make_unique<IdentityEditor>();
  if (settings.editor == "synthetic-sticky") {
    return std::make_unique<StickyEditor>(settings.sticky_threshold);
  }
  if (settings.editor == "http") {
    return std::make_unique<HttpEditor>(settings.endpoint, settings.timeout_seconds);
  }
  throw ConfigError("unknown editor backend '" + settings.editor + "'");
}

std::unique_ptr<EmbeddingBackend> make_embedder(const BackendSettings& settings) {
  if (settings.embedder == "toy") return std::make_unique<ToyEmbedder>();
  if (settings.embedder == "http") {
    return std::make_unique<HttpEmbedder>(settings.endpoint, settings.timeout_seconds);
  }
  throw ConfigError("unknown embedding backend '" + settings.embedder + "'");
}

}  // namespace dualfield
