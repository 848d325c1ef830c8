// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace dualfield {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Row-major H x W x 3 float image, channels interleaved, values nominally in [0,1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, float fill = 0.0f);
  Image(int height, int width, const Vec3& fill);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return pixels_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  float& at(int row, int col, int channel) {
    return pixels_[offset(row, col) + static_cast<std::size_t>(channel)];
  }
  float at(int row, int col, int channel) const {
    return pixels_[offset(row, col) + static_cast<std::size_t>(channel)];
  }
  Vec3 rgb(int row, int col) const {
    const std::size_t o = offset(row, col);
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
  }
  void set_rgb(int row, int col, const Vec3& c) {
    const std::size_t o = offset(row, col);
    pixels_[o] = static_cast<float>(c.x());
    pixels_[o + 1] = static_cast<float>(c.y());
    pixels_[o + 2] = static_cast<float>(c.z());
  }

  std::vector<float>& data() noexcept { return pixels_; }
  const std::vector<float>& data() const noexcept { return pixels_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool operator==(const Image& other) const = default;

 private:
  std::size_t offset(int row, int col) const noexcept {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) * 3;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
};

/// Mean absolute per-channel difference; images must share a shape.
double mean_abs_difference(const Image& a, const Image& b);

/// Snaps every value to the nearest k/255 after clamping to [0,1].
Image quantize_8bit(const Image& image);

}  // namespace dualfield
