// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/clustblock.hpp"

#include <cmath>
#include <string>

#include "refqsr/errors.hpp"
#include "refqsr/parallel.hpp"

namespace refqsr {

std::size_t ClustBlockWeights::param_count() const {
    return conv1_w.size() + conv1_b.size() + conv2_w.size() + conv2_b.size() + conv3_w.size() +
           conv3_b.size() + fc_w.data.size() + fc_b.size();
}

namespace {

LayerQuantConfig minmax_config(const Tensor& weight, const Tensor& activations, int bits) {
    LayerQuantConfig cfg;
    cfg.weight_params = calibrate_minmax(weight, bits);
    cfg.activation_params = calibrate_minmax(activations, bits);
    return cfg;
}

std::vector<float> extract_one(const Tensor& patch, const ClustBlockWeights& w, int bits) {
    const Tensor f1 = quantized_conv(patch, w.conv1_w, w.conv1_b,
                                     minmax_config(w.conv1_w, patch, bits), 3, 0, Activation::Relu);
    const Tensor f2 = quantized_conv(f1, w.conv2_w, w.conv2_b, minmax_config(w.conv2_w, f1, bits),
                                     1, 0, Activation::Relu);
    const Tensor f3 = quantized_conv(f2, w.conv3_w, w.conv3_b, minmax_config(w.conv3_w, f2, bits),
                                     1, 0, Activation::Relu);
    const Tensor pooled = pool(f3, PoolMode::GlobalAverage);

    std::vector<float> vec(pooled.values().begin(), pooled.values().end());
    const QuantParams act = calibrate_minmax(vec, bits);
    for (float& v : vec) v = quantize_value(v, act);
    Matrix qfc = w.fc_w;
    const QuantParams wp = calibrate_minmax(qfc.data, bits);
    for (float& v : qfc.data) v = quantize_value(v, wp);
    return fully_connected(vec, qfc, w.fc_b);
}

} // namespace

FeatureMatrix extract_features(const PatchGrid& patches, const ClustBlockWeights& weights,
                               int bits) {
    if (patches.count() == 0) throw DimensionError("extract_features: empty patch grid");
    FeatureMatrix features(patches.count(), weights.classes());
    parallel_for(patches.count(), [&](int i) {
        const std::vector<float> logits = extract_one(patches.patches[i], weights, bits);
        for (int c = 0; c < weights.classes(); ++c) features.at(i, c) = logits[c];
    });
    return features;
}

ClusterAssignment cluster_patches(const FeatureMatrix& features) {
    const int n = features.rows;
    if (n < 1) throw DimensionError("cluster_patches: need at least one patch");
    const int classes = features.cols;

    const Matrix by_patch = softmax(features, SoftmaxAxis::Rows);
    const Matrix by_class = softmax(features, SoftmaxAxis::Cols);

    ClusterAssignment out;
    out.ref_of.resize(n);
    out.similarity.assign(n, 1.0f);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        float best_score = -1.0f;
        for (int j = 0; j < n; ++j) {
            float m = 0.0f;
            for (int c = 0; c < classes; ++c) m += by_patch.at(i, c) * by_class.at(j, c);
            if (m > best_score) {
                best_score = m;
                best = j;
            }
        }
        out.ref_of[i] = best;
    }
    for (int i = 0; i < n; ++i) out.reference_set.insert(out.ref_of[i]);
    // A patch that must exist at high precision for its dependents is
    // executed as a reference even if its own argmax points elsewhere.
    for (int r : out.reference_set) out.ref_of[r] = r;
    return out;
}

float cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
    float dot = 0.0f;
    float na = 0.0f;
    float nb = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0f || nb == 0.0f) throw NormError("cosine_similarity: zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

ClusterAssignment apply_similarity_threshold(const ClusterAssignment& assignment,
                                             const FeatureMatrix& features, float tau) {
    if (assignment.count() != features.rows) {
        throw DimensionError("apply_similarity_threshold: assignment / feature count mismatch");
    }
    ClusterAssignment out = assignment;
    out.similarity.assign(out.count(), 1.0f);
    for (int i = 0; i < out.count(); ++i) {
        const int r = out.ref_of[i];
        float sim;
        try {
            sim = cosine_similarity(features.row(i), features.row(r));
        } catch (const NormError&) {
            out.undefined_similarity.push_back(i);
            out.similarity[i] = 0.0f;
            if (r != i) {
                out.ref_of[i] = i;
                out.isolated.insert(i);
                out.reference_set.insert(i);
            }
            continue;
        }
        out.similarity[i] = sim;
        if (r != i && sim <= tau) {
            out.ref_of[i] = i;
            out.isolated.insert(i);
            out.reference_set.insert(i);
        }
    }
    return out;
}

} // namespace refqsr
