// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualfield {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Standard alphabet with '=' padding. Throws PreconditionError on bad input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace dualfield
