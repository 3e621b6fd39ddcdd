// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "refqsr/clustblock.hpp"
#include "refqsr/tensor.hpp"

namespace refqsr {

// One reference/query training pair cropped from a single image.
struct PairSample {
    Tensor query_lr;
    Tensor query_hr;
    Tensor ref_lr;
    Tensor ref_hr;
    float similarity = 0.0f;
    int image_index = 0;
};

struct PairSamplerConfig {
    float tau = 0.5f;
    int count = 16;
    int max_retries = 100;
    int crop = 48; // LR-side crop; HR crops are scale-aligned
    std::uint32_t seed = 0;
};

// Repeat-until sampling: crop a query patch, then re-crop reference
// candidates from the same image until the extractor-feature cosine
// similarity exceeds tau. An image that exhausts max_retries is dropped
// with a warning; when every image is exhausted the sampler fails.
// Fixed seeds give bit-identical sample lists.
std::vector<PairSample> sample_training_pairs(
    const std::vector<std::pair<Tensor, Tensor>>& images, const ClustBlockWeights& extractor,
    const PairSamplerConfig& cfg);

} // namespace refqsr
