// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "refqsr/errors.hpp"

namespace refqsr {

Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias,
              int stride, int padding, Activation activation) {
    const int c_out = weight.batch();
    const int c_in = weight.channels();
    const int k_h = weight.height();
    const int k_w = weight.width();
    if (input.channels() != c_in) {
        throw DimensionError("conv2d: input has " + std::to_string(input.channels()) +
                             " channels, weight expects " + std::to_string(c_in));
    }
    if (!bias.empty() && static_cast<int>(bias.size()) != c_out) {
        throw DimensionError("conv2d: bias length does not match output channels");
    }
    if (stride < 1) throw GeometryError("conv2d: stride must be >= 1");
    if (padding < 0) throw GeometryError("conv2d: padding must be >= 0");

    const int in_h = input.height();
    const int in_w = input.width();
    const int out_h = (in_h + 2 * padding - k_h) / stride + 1;
    const int out_w = (in_w + 2 * padding - k_w) / stride + 1;
    if (in_h + 2 * padding < k_h || in_w + 2 * padding < k_w || out_h < 1 || out_w < 1) {
        throw GeometryError("conv2d: empty output for input " + std::to_string(in_h) + "x" +
                            std::to_string(in_w) + ", kernel " + std::to_string(k_h) + "x" +
                            std::to_string(k_w));
    }

    Tensor out(input.batch(), c_out, out_h, out_w);
    for (int b = 0; b < input.batch(); ++b) {
        for (int oc = 0; oc < c_out; ++oc) {
            const float b0 = bias.empty() ? 0.0f : bias[oc];
            float* out_plane = out.plane(b, oc);
            for (int oy = 0; oy < out_h; ++oy) {
                for (int ox = 0; ox < out_w; ++ox) {
                    float acc = b0;
                    const int iy0 = oy * stride - padding;
                    const int ix0 = ox * stride - padding;
                    for (int ic = 0; ic < c_in; ++ic) {
                        const float* in_plane = input.plane(b, ic);
                        const float* w_plane = weight.plane(oc, ic);
                        for (int ky = 0; ky < k_h; ++ky) {
                            const int iy = iy0 + ky;
                            if (iy < 0 || iy >= in_h) continue;
                            const float* in_row = in_plane + static_cast<std::size_t>(iy) * in_w;
                            const float* w_row = w_plane + static_cast<std::size_t>(ky) * k_w;
                            for (int kx = 0; kx < k_w; ++kx) {
                                const int ix = ix0 + kx;
                                if (ix < 0 || ix >= in_w) continue;
                                acc += in_row[ix] * w_row[kx];
                            }
                        }
                    }
                    if (activation == Activation::Relu && acc < 0.0f) acc = 0.0f;
                    out_plane[static_cast<std::size_t>(oy) * out_w + ox] = acc;
                }
            }
        }
    }
    return out;
}

std::vector<float> fully_connected(std::span<const float> input, const Matrix& weight,
                                   std::span<const float> bias) {
    if (static_cast<int>(input.size()) != weight.cols) {
        throw DimensionError("fully_connected: input length " + std::to_string(input.size()) +
                             " != weight cols " + std::to_string(weight.cols));
    }
    if (!bias.empty() && static_cast<int>(bias.size()) != weight.rows) {
        throw DimensionError("fully_connected: bias length does not match weight rows");
    }
    std::vector<float> out(weight.rows, 0.0f);
    for (int o = 0; o < weight.rows; ++o) {
        float acc = bias.empty() ? 0.0f : bias[o];
        const std::span<const float> w = weight.row(o);
        for (int i = 0; i < weight.cols; ++i) acc += w[i] * input[i];
        out[o] = acc;
    }
    return out;
}

Tensor pool(const Tensor& input, PoolMode mode) {
    if (input.empty()) throw DimensionError("pool: empty tensor");
    const int h = input.height();
    const int w = input.width();
    if (mode == PoolMode::GlobalAverage) {
        Tensor out(input.batch(), input.channels(), 1, 1);
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        for (int b = 0; b < input.batch(); ++b) {
            for (int c = 0; c < input.channels(); ++c) {
                const float sum = pairwise_sum({input.plane(b, c), plane});
                out.at(b, c, 0, 0) = sum / static_cast<float>(plane);
            }
        }
        return out;
    }
    const int out_h = (h + 2) / 3;
    const int out_w = (w + 2) / 3;
    Tensor out(input.batch(), input.channels(), out_h, out_w);
    for (int b = 0; b < input.batch(); ++b) {
        for (int c = 0; c < input.channels(); ++c) {
            const float* in_plane = input.plane(b, c);
            for (int oy = 0; oy < out_h; ++oy) {
                const int y0 = oy * 3;
                const int y1 = std::min(y0 + 3, h);
                for (int ox = 0; ox < out_w; ++ox) {
                    const int x0 = ox * 3;
                    const int x1 = std::min(x0 + 3, w);
                    float acc = 0.0f;
                    for (int y = y0; y < y1; ++y) {
                        const float* row = in_plane + static_cast<std::size_t>(y) * w;
                        for (int x = x0; x < x1; ++x) acc += row[x];
                    }
                    out.at(b, c, oy, ox) = acc / static_cast<float>((y1 - y0) * (x1 - x0));
                }
            }
        }
    }
    return out;
}

namespace {

// One bilinear tap along an axis: integer base, neighbor, fraction.
struct AxisTap {
    int lo;
    int hi;
    float frac;
};

AxisTap axis_tap(int dst, int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
    double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    const double max_coord = static_cast<double>(in_size - 1);
    if (src > max_coord) src = max_coord;
    const int lo = static_cast<int>(src);
    const float frac = static_cast<float>(src - lo);
    return {lo, std::min(lo + 1, in_size - 1), frac};
}

} // namespace

Tensor bilinear_resize(const Tensor& input, int out_h, int out_w, bool scale_values) {
    if (out_h < 1 || out_w < 1) throw DimensionError("bilinear_resize: output dims must be >= 1");
    if (input.height() < 1 || input.width() < 1) {
        throw DimensionError("bilinear_resize: empty input");
    }
    if (scale_values && input.channels() != 2) {
        throw DimensionError("bilinear_resize: scale_values requires a 2-channel coordinate field");
    }
    const int in_h = input.height();
    const int in_w = input.width();

    std::vector<AxisTap> xs(out_w);
    for (int x = 0; x < out_w; ++x) xs[x] = axis_tap(x, in_w, out_w);

    Tensor out(input.batch(), input.channels(), out_h, out_w);
    for (int b = 0; b < input.batch(); ++b) {
        for (int c = 0; c < input.channels(); ++c) {
            const float* in_plane = input.plane(b, c);
            float* out_plane = out.plane(b, c);
            for (int oy = 0; oy < out_h; ++oy) {
                const AxisTap ty = axis_tap(oy, in_h, out_h);
                const float* row0 = in_plane + static_cast<std::size_t>(ty.lo) * in_w;
                const float* row1 = in_plane + static_cast<std::size_t>(ty.hi) * in_w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const AxisTap& tx = xs[ox];
                    // Branch on exact hits so same-size resize copies bits.
                    float top = (tx.frac == 0.0f)
                                    ? row0[tx.lo]
                                    : (1.0f - tx.frac) * row0[tx.lo] + tx.frac * row0[tx.hi];
                    float v;
                    if (ty.frac == 0.0f) {
                        v = top;
                    } else {
                        const float bot = (tx.frac == 0.0f)
                                              ? row1[tx.lo]
                                              : (1.0f - tx.frac) * row1[tx.lo] + tx.frac * row1[tx.hi];
                        v = (1.0f - ty.frac) * top + ty.frac * bot;
                    }
                    out_plane[static_cast<std::size_t>(oy) * out_w + ox] = v;
                }
            }
        }
    }
    if (scale_values) {
        const float fx = static_cast<float>(out_w) / static_cast<float>(in_w);
        const float fy = static_cast<float>(out_h) / static_cast<float>(in_h);
        for (int b = 0; b < out.batch(); ++b) {
            float* px = out.plane(b, 0);
            float* py = out.plane(b, 1);
            const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
            for (std::size_t i = 0; i < plane; ++i) px[i] *= fx;
            for (std::size_t i = 0; i < plane; ++i) py[i] *= fy;
        }
    }
    return out;
}

Tensor pixel_shuffle(const Tensor& input, int upscale) {
    if (upscale < 1) throw DimensionError("pixel_shuffle: upscale must be >= 1");
    const int r = upscale;
    if (input.channels() % (r * r) != 0) {
        throw DimensionError("pixel_shuffle: channels " + std::to_string(input.channels()) +
                             " not divisible by " + std::to_string(r * r));
    }
    const int out_c = input.channels() / (r * r);
    const int h = input.height();
    const int w = input.width();
    Tensor out(input.batch(), out_c, h * r, w * r);
    for (int b = 0; b < input.batch(); ++b) {
        for (int c = 0; c < out_c; ++c) {
            float* out_plane = out.plane(b, c);
            for (int dy = 0; dy < r; ++dy) {
                for (int dx = 0; dx < r; ++dx) {
                    const float* in_plane = input.plane(b, c * r * r + dy * r + dx);
                    for (int y = 0; y < h; ++y) {
                        float* out_row =
                            out_plane + static_cast<std::size_t>(y * r + dy) * (w * r) + dx;
                        const float* in_row = in_plane + static_cast<std::size_t>(y) * w;
                        for (int x = 0; x < w; ++x) out_row[static_cast<std::size_t>(x) * r] = in_row[x];
                    }
                }
            }
        }
    }
    return out;
}

Matrix softmax(const Matrix& input, SoftmaxAxis axis) {
    Matrix out(input.rows, input.cols);
    if (axis == SoftmaxAxis::Rows) {
        for (int r = 0; r < input.rows; ++r) {
            float m = input.at(r, 0);
            for (int c = 1; c < input.cols; ++c) m = std::max(m, input.at(r, c));
            float sum = 0.0f;
            for (int c = 0; c < input.cols; ++c) {
                const float e = std::exp(input.at(r, c) - m);
                out.at(r, c) = e;
                sum += e;
            }
            for (int c = 0; c < input.cols; ++c) out.at(r, c) /= sum;
        }
    } else {
        for (int c = 0; c < input.cols; ++c) {
            float m = input.at(0, c);
            for (int r = 1; r < input.rows; ++r) m = std::max(m, input.at(r, c));
            float sum = 0.0f;
            for (int r = 0; r < input.rows; ++r) {
                const float e = std::exp(input.at(r, c) - m);
                out.at(r, c) = e;
                sum += e;
            }
            for (int r = 0; r < input.rows; ++r) out.at(r, c) /= sum;
        }
    }
    return out;
}

} // namespace refqsr
