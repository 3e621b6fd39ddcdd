// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "refqsr/errors.hpp"

namespace refqsr {

void QuantParams::validate() const {
    if (!(alpha < beta)) {
        throw PolicyError("QuantParams: alpha must be strictly below beta");
    }
    if (bits < 2 || bits > 32) {
        throw PolicyError("QuantParams: bits must lie in [2, 32], got " + std::to_string(bits));
    }
}

float step_size(const QuantParams& params) {
    params.validate();
    const double levels = std::ldexp(1.0, params.bits) - 1.0;
    return static_cast<float>((static_cast<double>(params.beta) - params.alpha) / levels);
}

namespace {

inline float quantize_one(float x, double alpha, double beta, double step) {
    double v = static_cast<double>(x);
    v = std::min(std::max(v, alpha), beta);
    const double code = std::round((v - alpha) / step);
    const double r = alpha + code * step;
    return static_cast<float>(std::min(std::max(r, alpha), beta));
}

} // namespace

float quantize_value(float x, const QuantParams& params) {
    params.validate();
    const double levels = std::ldexp(1.0, params.bits) - 1.0;
    const double step = (static_cast<double>(params.beta) - params.alpha) / levels;
    return quantize_one(x, params.alpha, params.beta, step);
}

Tensor quantize(const Tensor& x, const QuantParams& params) {
    params.validate();
    const double levels = std::ldexp(1.0, params.bits) - 1.0;
    const double step = (static_cast<double>(params.beta) - params.alpha) / levels;
    Tensor out = x;
    for (float& v : out.values()) v = quantize_one(v, params.alpha, params.beta, step);
    return out;
}

QuantParams calibrate_minmax(std::span<const float> values, int bits) {
    if (values.empty()) throw DimensionError("calibrate_minmax: empty tensor");
    float lo = values[0];
    float hi = values[0];
    for (float v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo < hi)) hi = lo + 1.0f;
    return QuantParams{lo, hi, bits};
}

QuantParams calibrate_minmax(const Tensor& x, int bits) {
    return calibrate_minmax(x.values(), bits);
}

BitPolicy derive_bit_policy(int b_high, int b_low) {
    if (b_low > b_high) throw PolicyError("bit policy: b_low must not exceed b_high");
    if (b_low < 2 || b_high > 32) throw PolicyError("bit policy: bits must lie in [2, 32]");
    BitPolicy policy;
    policy.b_high = b_high;
    policy.b_low = b_low;
    policy.b_medium = (b_high + b_low + 1) / 2; // round_half_up of the midpoint
    return policy;
}

Tensor quantized_conv(const Tensor& input, const Tensor& weight, std::span<const float> bias,
                      const LayerQuantConfig& cfg, int stride, int padding,
                      Activation activation) {
    const Tensor* in = &input;
    const Tensor* w = &weight;
    Tensor qin;
    Tensor qw;
    if (cfg.quantize_activations) {
        qin = quantize(input, cfg.activation_params);
        in = &qin;
    }
    if (cfg.quantize_weights) {
        qw = quantize(weight, cfg.weight_params);
        w = &qw;
    }
    return conv2d(*in, *w, bias, stride, padding, activation);
}

} // namespace refqsr
