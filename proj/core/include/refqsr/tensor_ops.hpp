// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "refqsr/tensor.hpp"

namespace refqsr {

enum class Activation { None, Relu };

// 2-D cross-correlation (no kernel flip), the usual deep-learning
// convention. weight is (C_out, C_in, kH, kW); bias may be empty or
// have C_out entries. Output spatial size is
// floor((in + 2*padding - k) / stride) + 1 per axis.
Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias,
              int stride, int padding, Activation activation = Activation::None);

// out[o] = sum_i weight(o, i) * input[i] + bias[o]
std::vector<float> fully_connected(std::span<const float> input, const Matrix& weight,
                                   std::span<const float> bias);

enum class PoolMode {
    GlobalAverage,     // (B, C, H, W) -> (B, C, 1, 1)
    Average3x3Stride3, // kernel 3, stride 3; partial edge windows average valid pixels only
};

Tensor pool(const Tensor& input, PoolMode mode);

// Bilinear resampling with the align-corners-false convention:
// src = (dst + 0.5) * (in / out) - 0.5, clamped to the valid range.
// Resizing to the identical size is a bit-exact copy.
//
// scale_values is for 2-channel coordinate fields (flows): channel 0 is
// multiplied by out_w/in_w and channel 1 by out_h/in_h so the stored
// coordinates stay valid at the target resolution.
Tensor bilinear_resize(const Tensor& input, int out_h, int out_w, bool scale_values = false);

// Depth-to-space: (B, C*r^2, H, W) -> (B, C, H*r, W*r), standard ordering
// out(b, c, y*r + dy, x*r + dx) = in(b, c*r^2 + dy*r + dx, y, x).
Tensor pixel_shuffle(const Tensor& input, int upscale);

enum class SoftmaxAxis { Rows, Cols };

// Max-stabilized softmax along the chosen axis; each slice sums to 1.
Matrix softmax(const Matrix& input, SoftmaxAxis axis);

} // namespace refqsr
