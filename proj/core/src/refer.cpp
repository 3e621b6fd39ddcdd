// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/refer.hpp"

#include <algorithm>
#include <cmath>

#include "refqsr/errors.hpp"

namespace refqsr {

Tensor preprocess_features(const Tensor& f, int bits) {
    if (f.batch() != 1) throw DimensionError("preprocess_features: expected a single patch");
    float sq = 0.0f;
    {
        std::vector<float> squares(f.size());
        const std::span<const float> v = f.values();
        for (std::size_t i = 0; i < v.size(); ++i) squares[i] = v[i] * v[i];
        sq = pairwise_sum(squares);
    }
    if (sq == 0.0f) throw NormError("preprocess_features: zero-norm feature");
    const float norm = std::sqrt(sq);

    Tensor normalized = f;
    for (float& v : normalized.values()) v /= norm;
    const Tensor pooled = pool(normalized, PoolMode::Average3x3Stride3);
    return quantize(pooled, calibrate_minmax(pooled, bits));
}

CostVolume cost_volume(const Tensor& fq, const Tensor& fr) {
    if (!fq.same_shape(fr)) throw DimensionError("cost_volume: feature shapes differ");
    if (fq.batch() != 1) throw DimensionError("cost_volume: expected single-patch features");
    const int c = fq.channels();
    const int h = fq.height();
    const int w = fq.width();
    CostVolume e(h, w);
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            for (int jy = 0; jy < h; ++jy) {
                for (int jx = 0; jx < w; ++jx) {
                    float dot = 0.0f;
                    for (int ch = 0; ch < c; ++ch) {
                        dot += fq.at(0, ch, iy, ix) * fr.at(0, ch, jy, jx);
                    }
                    e.at(iy, ix, jy, jx) = dot;
                }
            }
        }
    }
    return e;
}

Flow flow_from_cost(const CostVolume& cost, float temperature, FlowMode mode, int target_h,
                    int target_w) {
    const int h = cost.h;
    const int w = cost.w;
    if (h < 1 || w < 1) throw DimensionError("flow_from_cost: empty cost volume");
    if (mode == FlowMode::Soft && !(temperature > 0.0f)) {
        throw PolicyError("flow_from_cost: soft mode needs a positive temperature");
    }

    Tensor pooled(1, 2, h, w);
    const int positions = h * w;
    std::vector<float> weights(positions);
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            if (mode == FlowMode::Hard) {
                int best = 0;
                float best_score = cost.at(iy, ix, 0, 0);
                for (int j = 1; j < positions; ++j) {
                    const float s = cost.at(iy, ix, j / w, j % w);
                    if (s > best_score) {
                        best_score = s;
                        best = j;
                    }
                }
                pooled.at(0, 0, iy, ix) = static_cast<float>(best % w);
                pooled.at(0, 1, iy, ix) = static_cast<float>(best / w);
                continue;
            }
            float m = cost.at(iy, ix, 0, 0);
            for (int j = 1; j < positions; ++j) m = std::max(m, cost.at(iy, ix, j / w, j % w));
            float sum = 0.0f;
            for (int j = 0; j < positions; ++j) {
                const float e = std::exp(temperature * (cost.at(iy, ix, j / w, j % w) - m));
                weights[j] = e;
                sum += e;
            }
            float ex = 0.0f;
            float ey = 0.0f;
            for (int j = 0; j < positions; ++j) {
                const float p = weights[j] / sum;
                ex += p * static_cast<float>(j % w);
                ey += p * static_cast<float>(j / w);
            }
            pooled.at(0, 0, iy, ix) = ex;
            pooled.at(0, 1, iy, ix) = ey;
        }
    }

    Flow flow;
    flow.values = bilinear_resize(pooled, target_h, target_w, /*scale_values=*/true);
    flow.resolution =
        (target_h == h && target_w == w) ? FlowResolution::Pooled : FlowResolution::Full;
    return flow;
}

Tensor backward_warp(const Tensor& fr, const Flow& flow) {
    const Tensor& coords = flow.values;
    if (coords.channels() != 2) throw DimensionError("backward_warp: flow must have 2 channels");
    if (coords.height() != fr.height() || coords.width() != fr.width()) {
        throw DimensionError("backward_warp: flow resolution does not match the feature");
    }
    const int h = fr.height();
    const int w = fr.width();
    Tensor out(fr.batch(), fr.channels(), h, w);
    for (int b = 0; b < fr.batch(); ++b) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                float sx = coords.at(0, 0, y, x);
                float sy = coords.at(0, 1, y, x);
                sx = std::min(std::max(sx, 0.0f), static_cast<float>(w - 1));
                sy = std::min(std::max(sy, 0.0f), static_cast<float>(h - 1));
                const int x0 = static_cast<int>(sx);
                const int y0 = static_cast<int>(sy);
                const int x1 = std::min(x0 + 1, w - 1);
                const int y1 = std::min(y0 + 1, h - 1);
                const float fx = sx - static_cast<float>(x0);
                const float fy = sy - static_cast<float>(y0);
                for (int c = 0; c < fr.channels(); ++c) {
                    const float* plane = fr.plane(b, c);
                    const float* row0 = plane + static_cast<std::size_t>(y0) * w;
                    const float* row1 = plane + static_cast<std::size_t>(y1) * w;
                    const float top =
                        (fx == 0.0f) ? row0[x0] : (1.0f - fx) * row0[x0] + fx * row0[x1];
                    float v;
                    if (fy == 0.0f) {
                        v = top;
                    } else {
                        const float bot =
                            (fx == 0.0f) ? row1[x0] : (1.0f - fx) * row1[x0] + fx * row1[x1];
                        v = (1.0f - fy) * top + fy * bot;
                    }
                    out.at(b, c, y, x) = v;
                }
            }
        }
    }
    return out;
}

namespace {

Tensor run_head(const Tensor& diff, const ReferHead& head, int bits) {
    LayerQuantConfig cfg1;
    cfg1.weight_params = calibrate_minmax(head.conv1_w, bits);
    cfg1.activation_params = calibrate_minmax(diff, bits);
    const Tensor mid = quantized_conv(diff, head.conv1_w, head.conv1_b, cfg1, 1, 1,
                                      Activation::Relu);
    LayerQuantConfig cfg2;
    cfg2.weight_params = calibrate_minmax(head.conv2_w, bits);
    cfg2.activation_params = calibrate_minmax(mid, bits);
    return quantized_conv(mid, head.conv2_w, head.conv2_b, cfg2, 1, 0, Activation::None);
}

} // namespace

Tensor refer_forward(const Tensor& fq, const Tensor& fr, const ReferHead& head,
                     const ReferOptions& opts, bool* fell_back) {
    if (!fq.same_shape(fr)) throw DimensionError("refer_forward: feature shapes differ");
    if (fell_back) *fell_back = false;

    Tensor pq;
    Tensor pr;
    try {
        pq = preprocess_features(fq, opts.b_low);
        pr = preprocess_features(fr, opts.b_low);
    } catch (const NormError&) {
        if (fell_back) *fell_back = true;
        return fq;
    }

    const CostVolume e = cost_volume(pq, pr);
    const Flow flow = flow_from_cost(e, opts.temperature, opts.flow_mode, fq.height(), fq.width());
    const Tensor aligned = backward_warp(fr, flow);

    Tensor diff = fq;
    {
        std::span<const float> a = aligned.values();
        std::span<float> d = diff.values();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= a[i];
    }
    const Tensor correction = run_head(diff, head, opts.b_high);

    Tensor out = fq;
    std::span<const float> c = correction.values();
    std::span<float> o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += c[i];
    return out;
}

} // namespace refqsr
