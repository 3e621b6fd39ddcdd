// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include "refqsr/errors.hpp"
#include "refqsr/parallel.hpp"
#include "refqsr/tensor_ops.hpp"

namespace refqsr {

namespace {

std::vector<int> axis_origins(int extent, int patch, int stride) {
    std::vector<int> origins{0};
    while (origins.back() + patch < extent) {
        origins.push_back(std::min(origins.back() + stride, extent - patch));
    }
    return origins;
}

} // namespace

std::vector<std::pair<int, int>> core_intervals(const std::vector<int>& origins, int patch,
                                                int extent) {
    std::vector<std::pair<int, int>> cores(origins.size());
    for (std::size_t k = 0; k < origins.size(); ++k) {
        const int begin = (k == 0) ? 0 : (origins[k] + origins[k - 1] + patch) / 2;
        const int end =
            (k + 1 == origins.size()) ? extent : (origins[k + 1] + origins[k] + patch) / 2;
        cores[k] = {begin, end};
    }
    return cores;
}

PatchGrid tile_layout(int image_h, int image_w, const TilingConfig& cfg) {
    cfg.validate();
    if (image_h < 1 || image_w < 1) throw DimensionError("tile_layout: empty image");
    PatchGrid grid;
    grid.image_h = image_h;
    grid.image_w = image_w;
    grid.overlap = cfg.overlap;
    grid.patch_h = std::min(cfg.patch_size, image_h);
    grid.patch_w = std::min(cfg.patch_size, image_w);
    const int stride_h = std::max(grid.patch_h - 2 * cfg.overlap, 1);
    const int stride_w = std::max(grid.patch_w - 2 * cfg.overlap, 1);
    grid.row_origins = axis_origins(image_h, grid.patch_h, stride_h);
    grid.col_origins = axis_origins(image_w, grid.patch_w, stride_w);
    return grid;
}

PatchGrid tile_image(const Tensor& image, const TilingConfig& cfg) {
    if (image.batch() != 1) throw DimensionError("tile_image: expected a single image");
    PatchGrid grid = tile_layout(image.height(), image.width(), cfg);

    grid.patches.reserve(grid.row_origins.size() * grid.col_origins.size());
    for (int oy : grid.row_origins) {
        for (int ox : grid.col_origins) {
            Tensor patch(1, image.channels(), grid.patch_h, grid.patch_w);
            for (int c = 0; c < image.channels(); ++c) {
                for (int y = 0; y < grid.patch_h; ++y) {
                    const float* src = image.plane(0, c) +
                                       static_cast<std::size_t>(oy + y) * image.width() + ox;
                    float* dst = patch.plane(0, c) + static_cast<std::size_t>(y) * grid.patch_w;
                    std::copy(src, src + grid.patch_w, dst);
                }
            }
            grid.patches.push_back(std::move(patch));
        }
    }
    return grid;
}

namespace {

QuantParams bounds_or_minmax(const ModelWeights& weights, const std::string& key,
                             const Tensor& observed, int bits) {
    const auto it = weights.act_bounds.find(key);
    if (it != weights.act_bounds.end()) {
        return QuantParams{it->second.first, it->second.second, bits};
    }
    return calibrate_minmax(observed, bits);
}

// Residual-block weights pre-quantized for one path's schedule. Bits of
// 32 mean the layer runs unquantized.
struct PreparedBlock {
    const BackboneWeights::ResBlock* raw = nullptr;
    Tensor conv1_w;
    Tensor conv2_w;
    BlockBits bits;
    int refer_index = -1; // index into weights.refer_heads when is_refer
};

std::vector<PreparedBlock> prepare_path(const ModelWeights& weights,
                                        const std::vector<BlockBits>& schedule) {
    std::vector<PreparedBlock> blocks(schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        PreparedBlock& pb = blocks[i];
        pb.raw = &weights.backbone.blocks[i];
        pb.bits = schedule[i];
        if (pb.bits.is_refer) continue;
        if (pb.bits.weight_bits < 32) {
            const std::string base = "backbone.block" + std::to_string(i);
            const QuantParams p1 = bounds_or_minmax(weights, base + ".conv1.weight",
                                                    pb.raw->conv1_w, pb.bits.weight_bits);
            const QuantParams p2 = bounds_or_minmax(weights, base + ".conv2.weight",
                                                    pb.raw->conv2_w, pb.bits.weight_bits);
            pb.conv1_w = quantize(pb.raw->conv1_w, p1);
            pb.conv2_w = quantize(pb.raw->conv2_w, p2);
        } else {
            pb.conv1_w = pb.raw->conv1_w;
            pb.conv2_w = pb.raw->conv2_w;
        }
    }
    return blocks;
}

Tensor quantize_acts(const ModelWeights& weights, const std::string& key, const Tensor& x,
                     int bits) {
    if (bits >= 32) return x;
    return quantize(x, bounds_or_minmax(weights, key, x, bits));
}

Tensor forward_prepared(const Tensor& patch, const ModelWeights& weights,
                        const std::vector<PreparedBlock>& blocks, const InferencePlan& plan,
                        const ReferOptions& refer_opts, Snapshots* capture, const Snapshots* use,
                        std::atomic<int>* fallbacks) {
    const BackboneWeights& bb = weights.backbone;
    const Tensor f0 = conv2d(patch, bb.head_w, bb.head_b, 1, 1);

    Tensor f = f0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const PreparedBlock& pb = blocks[i];
        const std::string base = "backbone.block" + std::to_string(i);
        if (capture && std::count(plan.refer_positions.begin(), plan.refer_positions.end(),
                                  static_cast<int>(i))) {
            capture->at_position[static_cast<int>(i)] = f;
        }
        if (pb.bits.is_refer) {
            if (!use || !use->at_position.count(static_cast<int>(i))) {
                throw PlanError("missing reference snapshot for trunk position " +
                                std::to_string(i));
            }
            if (pb.refer_index < 0 ||
                pb.refer_index >= static_cast<int>(weights.refer_heads.size())) {
                throw PlanError("no refinement head for trunk position " + std::to_string(i));
            }
            ReferOptions opts = refer_opts;
            opts.b_low = plan.policy.b_low;
            opts.b_high = pb.bits.act_bits;
            bool fell_back = false;
            f = refer_forward(f, use->at_position.at(static_cast<int>(i)),
                              weights.refer_heads[pb.refer_index], opts, &fell_back);
            if (fell_back && fallbacks) fallbacks->fetch_add(1);
            continue;
        }
        Tensor t = quantize_acts(weights, base + ".conv1.act", f, pb.bits.act_bits);
        t = conv2d(t, pb.conv1_w, pb.raw->conv1_b, 1, 1, Activation::Relu);
        t = quantize_acts(weights, base + ".conv2.act", t, pb.bits.act_bits);
        t = conv2d(t, pb.conv2_w, pb.raw->conv2_b, 1, 1);
        for (std::size_t n = 0; n < f.size(); ++n) f.data()[n] += t.data()[n];
    }

    Tensor body = conv2d(f, bb.skip_w, bb.skip_b, 1, 1);
    for (std::size_t n = 0; n < body.size(); ++n) body.data()[n] += f0.data()[n];

    Tensor hr = std::move(body);
    for (const BackboneWeights::Upsample& up : bb.upsample) {
        hr = conv2d(hr, up.w, up.b, 1, 1);
        hr = pixel_shuffle(hr, up.factor);
    }
    return conv2d(hr, bb.tail_w, bb.tail_b, 1, 1);
}

std::vector<PreparedBlock> prepare_with_heads(const ModelWeights& weights,
                                              const std::vector<BlockBits>& schedule,
                                              const std::vector<int>& refer_positions) {
    std::vector<PreparedBlock> blocks = prepare_path(weights, schedule);
    for (std::size_t k = 0; k < refer_positions.size(); ++k) {
        const int pos = refer_positions[k];
        if (pos >= 0 && pos < static_cast<int>(blocks.size())) {
            blocks[pos].refer_index = static_cast<int>(k);
        }
    }
    return blocks;
}

} // namespace

Tensor backbone_forward(const Tensor& patch, const ModelWeights& weights, Path path,
                        const InferencePlan& plan, const ReferOptions& refer_opts,
                        Snapshots* capture, const Snapshots* use) {
    const std::vector<BlockBits>& schedule =
        (path == Path::Reference) ? plan.reference_schedule : plan.query_schedule;
    if (schedule.size() != weights.backbone.blocks.size()) {
        throw PlanError("plan schedule does not match the backbone depth");
    }
    const std::vector<PreparedBlock> blocks =
        prepare_with_heads(weights, schedule, plan.refer_positions);
    return forward_prepared(patch, weights, blocks, plan, refer_opts, capture,
                            path == Path::Query ? use : nullptr, nullptr);
}

Tensor merge_tiles(const std::vector<Tensor>& hr_patches, const PatchGrid& grid, int scale) {
    if (static_cast<int>(hr_patches.size()) != grid.count()) {
        throw DimensionError("merge_tiles: patch count mismatch");
    }
    if (grid.count() == 0) throw DimensionError("merge_tiles: empty grid");
    const int channels = hr_patches[0].channels();
    Tensor out(1, channels, grid.image_h * scale, grid.image_w * scale);

    const auto row_cores = core_intervals(grid.row_origins, grid.patch_h, grid.image_h);
    const auto col_cores = core_intervals(grid.col_origins, grid.patch_w, grid.image_w);
    const int cols = static_cast<int>(grid.col_origins.size());

    for (int k = 0; k < grid.count(); ++k) {
        const Tensor& hp = hr_patches[k];
        if (hp.height() != grid.patch_h * scale || hp.width() != grid.patch_w * scale) {
            throw DimensionError("merge_tiles: patch " + std::to_string(k) +
                                 " has unexpected upscaled size");
        }
        const int r = k / cols;
        const int c = k % cols;
        const auto [rb, re] = row_cores[r];
        const auto [cb, ce] = col_cores[c];
        const int oy = grid.row_origins[r];
        const int ox = grid.col_origins[c];
        for (int ch = 0; ch < channels; ++ch) {
            for (int y = rb * scale; y < re * scale; ++y) {
                const float* src = hp.plane(0, ch) +
                                   static_cast<std::size_t>(y - oy * scale) * hp.width() +
                                   (cb - ox) * scale;
                float* dst = out.plane(0, ch) + static_cast<std::size_t>(y) * out.width() +
                             cb * scale;
                std::copy(src, src + static_cast<std::size_t>(ce - cb) * scale, dst);
            }
        }
    }
    return out;
}

RunResult run_refqsr(const Tensor& image, const ModelWeights& weights, const NetworkConfig& net,
                     const TilingConfig& tiling, const BitPolicy& policy, float tau, RunMode mode,
                     const ReferOptions& refer_opts) {
    net.validate();
    if (static_cast<int>(weights.backbone.blocks.size()) != net.num_resblocks) {
        throw PlanError("weights do not match the configured trunk depth");
    }

    const PatchGrid grid = tile_image(image, tiling);
    const int n = grid.count();

    ClusterAssignment assignment;
    if (mode == RunMode::AllReference) {
        assignment.ref_of.resize(n);
        for (int i = 0; i < n; ++i) {
            assignment.ref_of[i] = i;
            assignment.reference_set.insert(i);
        }
        assignment.similarity.assign(n, 1.0f);
    } else {
        const FeatureMatrix features = extract_features(grid, weights.clust);
        assignment = apply_similarity_threshold(cluster_patches(features), features, tau);
    }

    InferencePlan plan = build_plan(net, policy, std::move(assignment), grid.patch_h,
                                    grid.patch_w, mode == RunMode::Refqsr);
    plan.clustering_enabled = (mode != RunMode::AllReference);

    const std::vector<PreparedBlock> ref_blocks =
        prepare_with_heads(weights, plan.reference_schedule, plan.refer_positions);
    const std::vector<PreparedBlock> query_blocks =
        prepare_with_heads(weights, plan.query_schedule, plan.refer_positions);

    std::vector<int> references;
    std::vector<int> queries;
    for (int i = 0; i < n; ++i) {
        (plan.assignment.is_reference(i) ? references : queries).push_back(i);
    }

    const bool need_snapshots = !plan.refer_positions.empty() && !queries.empty();
    std::vector<Tensor> hr(n);
    std::map<int, Snapshots> snapshots;
    for (int r : references) snapshots[r]; // pre-insert so workers never rehash
    std::atomic<int> fallbacks{0};

    parallel_for(static_cast<int>(references.size()), [&](int idx) {
        const int p = references[idx];
        try {
            hr[p] = forward_prepared(grid.patches[p], weights, ref_blocks, plan, refer_opts,
                                     need_snapshots ? &snapshots[p] : nullptr, nullptr,
                                     &fallbacks);
        } catch (const std::exception& e) {
            throw Error("patch " + std::to_string(p) + ": " + e.what());
        }
    });
    parallel_for(static_cast<int>(queries.size()), [&](int idx) {
        const int p = queries[idx];
        try {
            const Snapshots* snaps = nullptr;
            if (need_snapshots) {
                const auto it = snapshots.find(plan.assignment.ref_of[p]);
                if (it == snapshots.end()) {
                    throw PlanError("no reference snapshots for patch");
                }
                snaps = &it->second;
            }
            hr[p] = forward_prepared(grid.patches[p], weights, query_blocks, plan, refer_opts,
                                     nullptr, snaps, &fallbacks);
        } catch (const std::exception& e) {
            throw Error("patch " + std::to_string(p) + ": " + e.what());
        }
    });

    RunResult result;
    result.image = merge_tiles(hr, grid, net.scale_factor);
    result.cost = build_cost_report(plan, net, {grid.image_h, grid.image_w},
                                    {static_cast<int>(references.size()),
                                     static_cast<int>(queries.size())});
    result.assignment = plan.assignment;
    result.plan = std::move(plan);
    result.fallback_count = fallbacks.load();
    return result;
}

} // namespace refqsr
