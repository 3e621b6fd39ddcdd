// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/metrics.hpp"

#include <cmath>
#include <vector>

#include "refqsr/errors.hpp"

namespace refqsr {

namespace {

constexpr double kPsnrCap = 99.0;

double mse(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("metrics: shapes differ");
    if (a.size() == 0) throw DimensionError("metrics: empty tensors");
    double acc = 0.0;
    const std::span<const float> va = a.values();
    const std::span<const float> vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = static_cast<double>(va[i]) - vb[i];
        acc += d * d;
    }
    return acc / static_cast<double>(va.size());
}

} // namespace

double psnr(const Tensor& a, const Tensor& b, double peak) {
    if (!(peak > 0.0)) throw DimensionError("psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

Tensor rgb_to_luma(const Tensor& image) {
    if (image.channels() != 3) throw DimensionError("rgb_to_luma: expected 3 channels");
    Tensor out(image.batch(), 1, image.height(), image.width());
    for (int b = 0; b < image.batch(); ++b) {
        const float* r = image.plane(b, 0);
        const float* g = image.plane(b, 1);
        const float* bl = image.plane(b, 2);
        float* y = out.plane(b, 0);
        const std::size_t n = static_cast<std::size_t>(image.height()) * image.width();
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = (65.481f * r[i] + 128.553f * g[i] + 24.966f * bl[i] + 16.0f) / 255.0f;
        }
    }
    return out;
}

double psnr_y(const Tensor& a, const Tensor& b) {
    return psnr(rgb_to_luma(a), rgb_to_luma(b), 1.0);
}

namespace {

std::vector<float> gaussian_kernel_11() {
    std::vector<float> k(11);
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - 5;
        k[i] = static_cast<float>(std::exp(-d * d / (2.0 * sigma * sigma)));
        sum += k[i];
    }
    for (float& v : k) v = static_cast<float>(v / sum);
    return k;
}

Tensor to_single_channel(const Tensor& t) {
    if (t.channels() == 1) return t;
    if (t.channels() == 3) return rgb_to_luma(t);
    throw DimensionError("ssim: expected 1 or 3 channels");
}

double ssim_term(double mu_x, double mu_y, double sxx, double syy, double sxy, double c1,
                 double c2) {
    return ((2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)) /
           ((mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2));
}

} // namespace

double ssim(const Tensor& a, const Tensor& b, double peak, bool* used_fallback) {
    if (!a.same_shape(b)) throw DimensionError("ssim: shapes differ");
    const Tensor xa = to_single_channel(a);
    const Tensor xb = to_single_channel(b);
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const int h = xa.height();
    const int w = xa.width();
    if (used_fallback) *used_fallback = false;

    if (h < 11 || w < 11) {
        // Too small for the window: single global-statistics term.
        if (used_fallback) *used_fallback = true;
        double mx = 0.0;
        double my = 0.0;
        const std::size_t n = xa.size();
        for (std::size_t i = 0; i < n; ++i) {
            mx += xa.data()[i];
            my += xb.data()[i];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxx = 0.0;
        double syy = 0.0;
        double sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = xa.data()[i] - mx;
            const double dy = xb.data()[i] - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        const double denom = static_cast<double>(n);
        return ssim_term(mx, my, sxx / denom, syy / denom, sxy / denom, c1, c2);
    }

    const std::vector<float> k = gaussian_kernel_11();
    double total = 0.0;
    int windows = 0;
    for (int b0 = 0; b0 < xa.batch(); ++b0) {
        const float* pa = xa.plane(b0, 0);
        const float* pb = xb.plane(b0, 0);
        for (int y = 0; y + 11 <= h; ++y) {
            for (int x = 0; x + 11 <= w; ++x) {
                double mx = 0.0;
                double my = 0.0;
                double sxx = 0.0;
                double syy = 0.0;
                double sxy = 0.0;
                for (int dy = 0; dy < 11; ++dy) {
                    const float* ra = pa + static_cast<std::size_t>(y + dy) * w + x;
                    const float* rb = pb + static_cast<std::size_t>(y + dy) * w + x;
                    for (int dx = 0; dx < 11; ++dx) {
                        const double weight = static_cast<double>(k[dy]) * k[dx];
                        mx += weight * ra[dx];
                        my += weight * rb[dx];
                        sxx += weight * ra[dx] * ra[dx];
                        syy += weight * rb[dx] * rb[dx];
                        sxy += weight * ra[dx] * rb[dx];
                    }
                }
                total += ssim_term(mx, my, sxx - mx * mx, syy - my * my, sxy - mx * my, c1, c2);
                ++windows;
            }
        }
    }
    return total / windows;
}

double l1_loss(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("l1_loss: shapes differ");
    if (a.size() == 0) throw DimensionError("l1_loss: empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
    }
    return acc / static_cast<double>(a.size());
}

double total_loss(const Tensor& out_r, const Tensor& out_q, const Tensor& target_r,
                  const Tensor& target_q, const Tensor& teacher_r, const Tensor& teacher_q,
                  const LossWeights& weights) {
    if (weights.lambda_1 < 0.0 || weights.lambda_kd < 0.0) {
        throw DimensionError("total_loss: weights must be non-negative");
    }
    return weights.lambda_1 * (l1_loss(out_r, target_r) + l1_loss(out_q, target_q)) +
           weights.lambda_kd * (l1_loss(out_r, teacher_r) + l1_loss(out_q, teacher_q));
}

} // namespace refqsr
