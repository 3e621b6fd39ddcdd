// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>

#include "refqsr/tensor.hpp"
#include "refqsr/tensor_ops.hpp"

namespace refqsr {

// Per-layer fake-quantization parameters: clipping range [alpha, beta]
// and bit precision. alpha < beta strictly; bits in [2, 32].
struct QuantParams {
    float alpha = 0.0f;
    float beta = 1.0f;
    int bits = 8;

    void validate() const;
};

// Step between adjacent quantization levels: (beta - alpha) / (2^b - 1).
float step_size(const QuantParams& params);

// Snap one value onto the quantization grid.
//
// The grid is anchored at alpha:
//
//     q(x) = alpha + round((clip(x, alpha, beta) - alpha) / s) * s
//
// The anchored form is the asymmetric-quantization reading that keeps
// every output inside [alpha, beta] for arbitrary bounds; a grid of bare
// multiples of s would only cover the range when alpha itself is a grid
// multiple. Rounding is half-away-from-zero. Internals run in double so
// the result is exact on the grid for every b up to 32; at most 2^b
// distinct outputs, idempotent, monotone.
float quantize_value(float x, const QuantParams& params);

Tensor quantize(const Tensor& x, const QuantParams& params);

// alpha = min(x), beta = max(x) (signed values; SR activations are
// asymmetric, so no |x| folding). A constant tensor gets beta = alpha + 1
// so the range stays non-degenerate; quantization is then exact.
QuantParams calibrate_minmax(std::span<const float> values, int bits);
QuantParams calibrate_minmax(const Tensor& x, int bits);

// The reference/query bit assignment: references run at b_high, query
// activations at b_low, query weights at the midpoint
// b_medium = round_half_up((b_high + b_low) / 2).
struct BitPolicy {
    int b_high = 8;
    int b_low = 4;
    int b_medium = 6;
    // Optional per-block activation precision, standing in for externally
    // chosen dynamic bit selections. Applies to blocks running at b_high.
    std::map<int, int> per_layer_override;
};

BitPolicy derive_bit_policy(int b_high, int b_low);

struct LayerQuantConfig {
    QuantParams weight_params;
    QuantParams activation_params;
    bool quantize_weights = true;
    bool quantize_activations = true;
};

// conv2d over fake-quantized operands. Arithmetic stays in floats on the
// quantized grid; with both flags off this is exactly conv2d.
Tensor quantized_conv(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                      const LayerQuantConfig& cfg, int stride, int padding,
                      Activation activation = Activation::None);

} // namespace refqsr
