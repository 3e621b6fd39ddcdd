// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "refqsr/clustblock.hpp"
#include "refqsr/config.hpp"
#include "refqsr/quantize.hpp"

namespace refqsr {

// Precision of one trunk position on one path. For a RefER position the
// bits describe the refinement head.
struct BlockBits {
    int weight_bits = 32;
    int act_bits = 32;
    bool is_refer = false;
};

// The resolved execution graph: which patch runs which path, the
// per-position bit schedule of both paths, and which trailing positions
// run as RefER blocks on the query path.
struct InferencePlan {
    ClusterAssignment assignment;
    BitPolicy policy;
    std::vector<BlockBits> reference_schedule;
    std::vector<BlockBits> query_schedule;
    std::vector<int> refer_positions;
    int patch_h = 0;
    int patch_w = 0;
    bool clustering_enabled = false;

    int num_references() const { return static_cast<int>(assignment.reference_set.size()); }
    int num_queries() const { return assignment.num_queries(); }
};

// Schedule rules: position 0 runs at b_high on both paths; reference
// positions all run at (b_high, b_high); query positions run at
// (b_medium weights, b_low activations) except the last K positions,
// which become RefER blocks with heads at b_high. Per-layer overrides
// replace the bits of positions scheduled at b_high.
InferencePlan build_plan(const NetworkConfig& net, const BitPolicy& policy,
                         ClusterAssignment assignment, int patch_h, int patch_w,
                         bool use_refer = true);

// Every position on both paths at the same precision, a single reference
// patch, no RefER. Bits 32 expresses the unquantized baseline.
InferencePlan uniform_plan(const NetworkConfig& net, int bits, int patch_h, int patch_w);

} // namespace refqsr
