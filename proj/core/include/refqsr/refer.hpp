// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "refqsr/quantize.hpp"
#include "refqsr/tensor.hpp"

namespace refqsr {

// Dense 4-D matching-cost array between pooled query positions i and
// pooled reference positions j; shape (h, w, h, w).
struct CostVolume {
    int h = 0;
    int w = 0;
    std::vector<float> values;

    CostVolume() = default;
    CostVolume(int h_, int w_)
        : h(h_), w(w_),
          values(static_cast<std::size_t>(h_) * w_ * h_ * w_, 0.0f) {}

    float& at(int iy, int ix, int jy, int jx) {
        return values[((static_cast<std::size_t>(iy) * w + ix) * h + jy) * w + jx];
    }
    float at(int iy, int ix, int jy, int jx) const {
        return values[((static_cast<std::size_t>(iy) * w + ix) * h + jy) * w + jx];
    }
};

enum class FlowResolution { Pooled, Full };

// Per-position absolute source coordinates into the reference feature:
// channel 0 holds x, channel 1 holds y.
struct Flow {
    Tensor values; // 1 x 2 x H x W
    FlowResolution resolution = FlowResolution::Pooled;
};

enum class FlowMode { Soft, Hard };

// Matching-space reduction of a raw feature: global L2 normalization,
// 3x3/stride-3 average pooling, then fake quantization at `bits` with
// min/max calibration. Invariant under positive rescaling of f.
Tensor preprocess_features(const Tensor& f, int bits);

// E(i, j) = <fq(i), fr(j)> over channels; fq, fr are preprocessed
// features of identical shape.
CostVolume cost_volume(const Tensor& fq, const Tensor& fr);

// Soft mode: temperature-softmax over all reference positions, expected
// coordinate (training semantics). Hard mode: argmax coordinate with
// smallest row-major index on ties (inference semantics). The pooled
// flow is bilinearly upsampled to (target_h, target_w) with coordinate
// scaling per axis.
Flow flow_from_cost(const CostVolume& cost, float temperature, FlowMode mode, int target_h,
                    int target_w);

// output(i) = bilinear sample of fr at flow(i); samples are clamped to
// the valid coordinate box.
Tensor backward_warp(const Tensor& fr, const Flow& flow);

// Two-layer refinement head: 3x3 conv C -> C/2, ReLU, 1x1 conv C/2 -> C.
struct ReferHead {
    Tensor conv1_w;
    std::vector<float> conv1_b;
    Tensor conv2_w;
    std::vector<float> conv2_b;

    std::size_t param_count() const {
        return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size();
    }
};

struct ReferOptions {
    int b_low = 4;
    int b_high = 8;
    FlowMode flow_mode = FlowMode::Hard;
    float temperature = 1000.0f;
};

// Reference-guided error refinement:
//
//     out = fq + Head(fq - warp(fr, flow))
//
// where the flow comes from the cost volume of the two preprocessed
// features at b_low and Head runs fake-quantized at b_high with dynamic
// min/max calibration. A zero head makes this the identity on fq. If
// either feature has zero norm the block falls back to returning fq
// unchanged (flagged through fell_back when provided).
Tensor refer_forward(const Tensor& fq, const Tensor& fr, const ReferHead& head,
                     const ReferOptions& opts, bool* fell_back = nullptr);

} // namespace refqsr
