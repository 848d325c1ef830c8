// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualfield/camera.hpp"
#include "dualfield/image.hpp"

namespace dualfield {

struct View {
  std::string name;  // frame stem, used for edited/<name>.png
  Image original;
  Image current;
  CameraPose pose;
  std::optional<double> score;
};

/// Multiview training set whose current images get progressively replaced by
/// edits. All views share one resolution.
struct EditDataset {
  std::vector<View> views;
  std::string prompt;
  std::size_t cursor = 0;

  int height() const { return views.empty() ? 0 : views.front().original.height(); }
  int width() const { return views.empty() ? 0 : views.front().original.width(); }
  std::size_t size() const noexcept { return views.size(); }

  /// Throws PreconditionError when the dataset breaks its invariants.
  void validate() const;
  std::vector<std::optional<double>> scores() const;
};

/// Reads `transforms.json` (fl_x, fl_y, cx, cy, w, h, frames[{file_path,
/// transform_matrix}]) and its PNGs. Throws LoadError.
EditDataset load_dataset(const std::filesystem::path& dir);

/// Writes originals under images/ and a transforms.json that load_dataset reads back.
void save_dataset(const EditDataset& dataset, const std::filesystem::path& dir);

/// Writes edited/<frame>.png for every view plus scores.json (frame -> S or null).
void save_edits(const EditDataset& dataset, const std::filesystem::path& dir);

}  // namespace dualfield
