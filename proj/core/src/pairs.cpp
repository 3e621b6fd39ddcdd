// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/pairs.hpp"

#include <iostream>
#include <random>
#include <set>
#include <string>

#include "refqsr/errors.hpp"
#include "refqsr/tensor_ops.hpp"

namespace refqsr {

namespace {

// Bias-free bounded draw, stable across platforms.
std::uint32_t bounded(std::mt19937& rng, std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(rng()) * n) >> 32);
}

Tensor crop(const Tensor& image, int oy, int ox, int size) {
    Tensor out(1, image.channels(), size, size);
    for (int c = 0; c < image.channels(); ++c) {
        for (int y = 0; y < size; ++y) {
            const float* src = image.plane(0, c) + static_cast<std::size_t>(oy + y) * image.width() + ox;
            std::copy(src, src + size, out.plane(0, c) + static_cast<std::size_t>(y) * size);
        }
    }
    return out;
}

std::vector<float> features_of(const Tensor& patch, const ClustBlockWeights& extractor) {
    PatchGrid grid;
    grid.patches.push_back(patch);
    grid.row_origins = {0};
    grid.col_origins = {0};
    grid.patch_h = patch.height();
    grid.patch_w = patch.width();
    const FeatureMatrix f = extract_features(grid, extractor);
    return {f.row(0).begin(), f.row(0).end()};
}

} // namespace

std::vector<PairSample> sample_training_pairs(
    const std::vector<std::pair<Tensor, Tensor>>& images, const ClustBlockWeights& extractor,
    const PairSamplerConfig& cfg) {
    if (images.empty()) throw SamplingError("sample_training_pairs: no images");
    std::vector<int> scales(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& [lr, hr] = images[i];
        if (lr.height() < cfg.crop || lr.width() < cfg.crop) {
            throw DimensionError("image " + std::to_string(i) + " is smaller than the crop size");
        }
        if (hr.height() % lr.height() != 0 || hr.width() % lr.width() != 0 ||
            hr.height() / lr.height() != hr.width() / lr.width()) {
            throw DimensionError("image " + std::to_string(i) +
                                 ": HR dims are not an integer multiple of LR dims");
        }
        scales[i] = hr.height() / lr.height();
    }

    std::mt19937 rng(cfg.seed);
    std::set<std::size_t> exhausted;
    std::vector<PairSample> out;
    out.reserve(cfg.count);
    while (static_cast<int>(out.size()) < cfg.count) {
        if (exhausted.size() == images.size()) {
            throw SamplingError("sample_training_pairs: every image exhausted its retries");
        }
        std::size_t img = bounded(rng, static_cast<std::uint32_t>(images.size()));
        if (exhausted.count(img)) continue;
        const auto& [lr, hr] = images[img];
        const int scale = scales[img];
        const int max_y = lr.height() - cfg.crop + 1;
        const int max_x = lr.width() - cfg.crop + 1;

        const int qy = static_cast<int>(bounded(rng, max_y));
        const int qx = static_cast<int>(bounded(rng, max_x));
        const Tensor q_lr = crop(lr, qy, qx, cfg.crop);
        const std::vector<float> q_feat = features_of(q_lr, extractor);

        bool accepted = false;
        for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
            const int ry = static_cast<int>(bounded(rng, max_y));
            const int rx = static_cast<int>(bounded(rng, max_x));
            const Tensor r_lr = crop(lr, ry, rx, cfg.crop);
            const std::vector<float> r_feat = features_of(r_lr, extractor);
            float sim;
            try {
                sim = cosine_similarity(q_feat, r_feat);
            } catch (const NormError&) {
                continue;
            }
            if (sim > cfg.tau) {
                PairSample sample;
                sample.query_lr = q_lr;
                sample.query_hr = crop(hr, qy * scale, qx * scale, cfg.crop * scale);
                sample.ref_lr = r_lr;
                sample.ref_hr = crop(hr, ry * scale, rx * scale, cfg.crop * scale);
                sample.similarity = sim;
                sample.image_index = static_cast<int>(img);
                out.push_back(std::move(sample));
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            std::cerr << "warning: image " << img << " exhausted " << cfg.max_retries
                      << " reference crops without clearing tau; skipping it\n";
            exhausted.insert(img);
        }
    }
    return out;
}

} // namespace refqsr
