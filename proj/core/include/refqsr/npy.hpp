// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace refqsr {

// Minimal .npy (format 1.0) writer for little-endian float32 arrays;
// used to dump flow fields in a form any numpy-based viewer can read.
void save_npy(const std::filesystem::path& path, std::span<const std::size_t> shape,
              std::span<const float> data);

} // namespace refqsr
