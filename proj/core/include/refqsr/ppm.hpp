// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "refqsr/tensor.hpp"

namespace refqsr {

// Binary PPM (P6, maxval 255) decoded to a 1 x 3 x H x W tensor with
// values in [0, 1] (byte / 255). Parse errors report the byte offset.
Tensor load_ppm(const std::filesystem::path& path);

// Inverse mapping: value * 255, rounded half up, clamped to [0, 255].
// Loading a saved image reproduces the bytes exactly.
void save_ppm(const Tensor& image, const std::filesystem::path& path);

} // namespace refqsr
