// Copyright 2026 The GRASS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "grass/model.hpp"

namespace grass {

/// Layout, little-endian:
///   "GRCK" | u32 version | u32 config length | config JSON bytes
///   u32 section count, each: u32 name length | name | u32 rows | u32 cols |
///   rows*cols f64 (parameters first, then running statistics)
///   u32 crc32 of everything before it
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, GrassModel& model);
GrassModel load_checkpoint(const std::filesystem::path& path);

}  // namespace grass
