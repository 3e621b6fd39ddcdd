// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/tensor.hpp"

#include "refqsr/errors.hpp"

namespace refqsr {

Tensor::Tensor(int batch, int channels, int height, int width)
    : shape_{batch, channels, height, width} {
    if (batch < 0 || channels < 0 || height < 0 || width < 0) {
        throw DimensionError("tensor dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(batch) * channels * height * width, 0.0f);
}

Tensor Tensor::full(int batch, int channels, int height, int width, float value) {
    Tensor t(batch, channels, height, width);
    for (float& v : t.data_) v = value;
    return t;
}

float pairwise_sum(std::span<const float> values) {
    const std::size_t n = values.size();
    if (n <= 32) {
        float acc = 0.0f;
        for (float v : values) acc += v;
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

} // namespace refqsr
