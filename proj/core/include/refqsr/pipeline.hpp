// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>

#include "refqsr/clustblock.hpp"
#include "refqsr/config.hpp"
#include "refqsr/cost_model.hpp"
#include "refqsr/plan.hpp"
#include "refqsr/refer.hpp"
#include "refqsr/weights.hpp"

namespace refqsr {

// Crop an image into full-sized overlapping patches. Origins advance by
// patch_size - 2*overlap; the final row/column shifts inward so every
// patch keeps the full size. Core regions (the pixels each patch owns
// after merging) split overlap zones at their midpoint and tile the
// image exactly once. An image smaller than the patch degenerates to a
// single image-sized patch.
PatchGrid tile_image(const Tensor& image, const TilingConfig& cfg);

// Origins-only tiling for analytic accounting: same geometry as
// tile_image, but no pixel data.
PatchGrid tile_layout(int image_h, int image_w, const TilingConfig& cfg);

// Half-open core interval [begin, end) per origin along one axis.
std::vector<std::pair<int, int>> core_intervals(const std::vector<int>& origins, int patch,
                                                int extent);

enum class Path { Reference, Query };

// Reference features captured at the input of each RefER trunk position.
struct Snapshots {
    std::map<int, Tensor> at_position;
};

// One patch through the backbone on one path. When `capture` is given,
// the feature entering each RefER trunk position is recorded (on either
// path). Query passes read the matching reference snapshot from `use`
// and run RefER there instead of the residual block; missing snapshots
// raise PlanError.
Tensor backbone_forward(const Tensor& patch, const ModelWeights& weights, Path path,
                        const InferencePlan& plan, const ReferOptions& refer_opts,
                        Snapshots* capture = nullptr, const Snapshots* use = nullptr);

// Stitch upscaled patches: each HR pixel comes from the scaled core
// region of exactly one patch.
Tensor merge_tiles(const std::vector<Tensor>& hr_patches, const PatchGrid& grid, int scale);

enum class RunMode { Refqsr, AllReference, AllQueryNoRefer };

struct RunResult {
    Tensor image;
    CostReport cost;
    ClusterAssignment assignment;
    InferencePlan plan;
    int fallback_count = 0; // RefER zero-norm fallbacks, if any
};

// The full patch-wise pipeline: tile, cluster (ClustBlock features +
// tau thresholding), run the reference patches at b_high and the query
// patches at (b_medium, b_low) with RefER in the trailing positions,
// reconstruct and merge. AllReference forces every patch onto the
// reference path; AllQueryNoRefer keeps the clustering but replaces
// RefER with plain low-bit residual blocks.
RunResult run_refqsr(const Tensor& image, const ModelWeights& weights, const NetworkConfig& net,
                     const TilingConfig& tiling, const BitPolicy& policy, float tau, RunMode mode,
                     const ReferOptions& refer_opts = {});

} // namespace refqsr
