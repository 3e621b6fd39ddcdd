// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <utility>
#include <vector>

#include "refqsr/quantize.hpp"
#include "refqsr/tensor.hpp"

namespace refqsr {

// Overlapping tiling of one source image into same-sized patches.
// Patches are stored row-major over (row_origins x col_origins); the
// origins are pixel offsets into the source image.
struct PatchGrid {
    std::vector<Tensor> patches; // each 1 x C x patch_h x patch_w
    std::vector<int> row_origins;
    std::vector<int> col_origins;
    int patch_h = 0;
    int patch_w = 0;
    int overlap = 0;
    int image_h = 0;
    int image_w = 0;

    int count() const { return static_cast<int>(patches.size()); }
    std::pair<int, int> origin(int index) const {
        const int cols = static_cast<int>(col_origins.size());
        return {row_origins[index / cols], col_origins[index % cols]};
    }
};

// N x C_hat logits, one row per patch.
using FeatureMatrix = Matrix;

// Result of patch clustering: every patch maps to exactly one reference
// patch (possibly itself); reference_set is the image of ref_of; isolated
// holds the patches promoted to self-reference by the tau threshold.
struct ClusterAssignment {
    std::vector<int> ref_of;
    std::set<int> reference_set;
    std::set<int> isolated;
    std::vector<float> similarity;          // cosine to the assigned reference
    std::vector<int> undefined_similarity;  // zero-norm rows, isolated and reported

    int count() const { return static_cast<int>(ref_of.size()); }
    bool is_reference(int i) const { return ref_of[i] == i; }
    int num_queries() const { return count() - static_cast<int>(reference_set.size()); }
};

// Table-layout texture feature extractor: three 3x3 QConv/ReLU layers
// (stride 3 then 1, 1; no padding; channels 3->64->64->32), global
// average pooling, and a 32 x C_hat QFC head. All layers run 8-bit with
// min/max clipping ranges.
struct ClustBlockWeights {
    Tensor conv1_w; // 64 x 3 x 3 x 3
    std::vector<float> conv1_b;
    Tensor conv2_w; // 64 x 64 x 3 x 3
    std::vector<float> conv2_b;
    Tensor conv3_w; // 32 x 64 x 3 x 3
    std::vector<float> conv3_b;
    Matrix fc_w; // C_hat x 32
    std::vector<float> fc_b;

    int classes() const { return fc_w.rows; }
    std::size_t param_count() const;
};

// Run every patch through the extractor; returns N x C_hat logits.
// Patches must be large enough for the three valid 3x3 convolutions.
FeatureMatrix extract_features(const PatchGrid& patches, const ClustBlockWeights& weights,
                               int bits = 8);

// Row-softmax(V) times column-softmax(V) gives an N x N affinity matrix;
// the row argmax picks each patch's reference. Ties break to the smallest
// index. A patch referenced by others is rewritten to reference itself.
ClusterAssignment cluster_patches(const FeatureMatrix& features);

// Queries whose cosine similarity (on raw logits) to their reference is
// <= tau become isolated self-references. Records similarities for all
// patches; zero-norm rows are isolated and reported.
ClusterAssignment apply_similarity_threshold(const ClusterAssignment& assignment,
                                             const FeatureMatrix& features, float tau);

// Cosine similarity of two logit rows; used by both the threshold pass
// and the training-pair sampler.
float cosine_similarity(std::span<const float> a, std::span<const float> b);

} // namespace refqsr
