// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dualfield/backends.hpp"
#include "dualfield/image.hpp"

namespace dualfield {

/// -10 log10(MSE), capped at 99 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

/// Luminance (0.299, 0.587, 0.114) of every pixel, row-major.
std::vector<double> luminance(const Image& image);

/// Mean SSIM over all fully-covered 11x11 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1) on luminance.
double ssim(const Image& a, const Image& b);

struct CaptionPair {
  std::string original_caption;
  std::string edited_caption;
};

/// cos(e_img_edited - e_img_original, e_text_edited - e_text_original).
/// Throws MetricError when either direction vector is zero.
double clip_t2i(std::span<const double> image_original, std::span<const double> image_edited,
                std::span<const double> text_original, std::span<const double> text_edited);
double clip_t2i(const Image& original, const Image& edited, const CaptionPair& captions,
                const EmbeddingBackend& embedder);

/// Mean cosine between embeddings of consecutive renders.
double clip_dir_consistency(std::span<const Image> renders, const EmbeddingBackend& embedder);

struct ViewMetrics {
  std::size_t index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> c_t2i;
};

struct MetricReport {
  std::optional<double> c_t2i;  // unset when every view's direction vector is zero
  std::optional<double> c_dir;  // unset with fewer than two edited images
  double ssim = 0.0;
  double psnr = 0.0;
  std::vector<ViewMetrics> per_view;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// PSNR/SSIM/C_t2i per (original, edited) pair, averaged, plus C_dir over the
/// edited sequence.
MetricReport evaluate(std::span<const Image> originals, std::span<const Image> edited,
                      const CaptionPair& captions, const EmbeddingBackend& embedder);

}  // namespace dualfield
