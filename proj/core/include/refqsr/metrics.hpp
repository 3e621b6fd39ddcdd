// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "refqsr/tensor.hpp"

namespace refqsr {

// 10 * log10(peak^2 / MSE) over all entries. Identical inputs return the
// documented cap of 99.0 dB instead of infinity.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// ITU-R BT.601 luma of an RGB image in [0, 1]: Y' in [16/255, 235/255].
Tensor rgb_to_luma(const Tensor& image);

// PSNR on the luma channel, the usual super-resolution convention.
double psnr_y(const Tensor& a, const Tensor& b);

// Mean SSIM over valid 11x11 Gaussian windows (sigma 1.5), C1/C2 from
// the given peak. Multi-channel inputs are converted to luma first.
// Images smaller than the window fall back to global statistics
// (single window), flagged through used_fallback when provided.
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0, bool* used_fallback = nullptr);

// Mean absolute difference.
double l1_loss(const Tensor& a, const Tensor& b);

struct LossWeights {
    double lambda_1 = 1.0;
    double lambda_kd = 1.0;
};

// lambda_1 * (L1(out_r, target_r) + L1(out_q, target_q))
//   + lambda_kd * (L1(out_r, teacher_r) + L1(out_q, teacher_q))
// The distillation terms measure distance to the full-precision
// pipeline's outputs.
double total_loss(const Tensor& out_r, const Tensor& out_q, const Tensor& target_r,
                  const Tensor& target_q, const Tensor& teacher_r, const Tensor& teacher_q,
                  const LossWeights& weights);

} // namespace refqsr
