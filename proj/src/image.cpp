// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/image.hpp"

#include <algorithm>
#include <cmath>

#include "dualfield/errors.hpp"

namespace dualfield {

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw PreconditionError("image dimensions must be nonnegative");
  pixels_.assign(pixel_count() * 3, fill);
}

Image::Image(int height, int width, const Vec3& fill) : Image(height, width) {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) pixels_[i * 3 + c] = static_cast<float>(fill[c]);
  }
}

double mean_abs_difference(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw PreconditionError("mean_abs_difference: image shapes differ");
  if (a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    sum += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
  }
  return sum / static_cast<double>(a.data().size());
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (float& v : out.data()) {
    const double q = std::round(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0);
    v = static_cast<float>(q / 255.0);
  }
  return out;
}

}  // namespace dualfield
