// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dualfield/field.hpp"

namespace dualfield {

// Layout (little-endian):
//   "DFN1"
//   u32 nx, u32 ny, u32 nz
//   u8  flags (bit 0: static grid present, bit 1: dynamic grid present)
//   f64 w_max_sigma, w_max_color, lambda, t, gamma
//   per present grid (static first): f32 density[N], f32 color[3N], x-major
inline constexpr std::uint8_t kCheckpointStatic = 0x1;
inline constexpr std::uint8_t kCheckpointDynamic = 0x2;

std::vector<std::uint8_t> serialize_checkpoint(const DualFieldModel& model);
/// A missing dynamic grid loads as zeros; a missing static grid is an error.
DualFieldModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const DualFieldModel& model);
DualFieldModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dualfield
