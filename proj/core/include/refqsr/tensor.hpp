// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace refqsr {

// Dense 4-D float array in (batch, channel, height, width) row-major
// order. The flat data length always equals the product of the four
// dimensions; every kernel in this library reads and writes through
// this one carrier.
class Tensor {
public:
    Tensor() = default;
    Tensor(int batch, int channels, int height, int width);

    static Tensor full(int batch, int channels, int height, int width, float value);

    int batch() const { return shape_[0]; }
    int channels() const { return shape_[1]; }
    int height() const { return shape_[2]; }
    int width() const { return shape_[3]; }
    const std::array<int, 4>& shape() const { return shape_; }

    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    float& at(int b, int c, int y, int x) { return data_[index(b, c, y, x)]; }
    float at(int b, int c, int y, int x) const { return data_[index(b, c, y, x)]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    // Pointer to the start of one (b, c) plane.
    float* plane(int b, int c) { return data_.data() + plane_index(b, c); }
    const float* plane(int b, int c) const { return data_.data() + plane_index(b, c); }

    bool operator==(const Tensor& other) const = default;

private:
    std::size_t index(int b, int c, int y, int x) const {
        return ((static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
    }
    std::size_t plane_index(int b, int c) const {
        return (static_cast<std::size_t>(b) * shape_[1] + c) * shape_[2] * shape_[3];
    }

    std::array<int, 4> shape_{0, 0, 0, 0};
    std::vector<float> data_;
};

// Small dense 2-D float matrix (rows x cols), row-major.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}

    float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::span<const float> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    bool operator==(const Matrix& other) const = default;
};

// Pairwise (cascade) summation. Keeps the relative error of large
// reductions at the 1e-7 * log2(n) level while staying in 32-bit floats.
float pairwise_sum(std::span<const float> values);

} // namespace refqsr
