// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dualfield/image.hpp"

namespace dualfield {

/// 8-bit RGB PNG; values are clamped and stored as round(255 * v).
std::vector<std::uint8_t> encode_png(const Image& image);
/// Decodes any PNG libpng understands into RGB floats k/255 (alpha dropped).
Image decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

// Lossless float dump: "IMGF", u32 height, u32 width, u32 reserved (zero),
// then H*W*3 little-endian f32 values.
void write_f32_dump(const std::filesystem::path& path, const Image& image);
Image read_f32_dump(const std::filesystem::path& path);

}  // namespace dualfield
