// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "refqsr/plan.hpp"

namespace refqsr {

// One accounted feature-stage layer (or RefER sub-op) on one path.
struct LayerCost {
    std::string name;
    std::string path;  // "reference" or "query"
    int patch_count = 0;
    double ops = 0.0;  // per patch, multiplies and adds counted separately
    int weight_bits = 32;
    int act_bits = 32;
    double bitops_g = 0.0; // patch_count * ops * (w_bits * act_bits) / 1024, in G
};

// Analytic complexity of a plan.
//
// bitops_g covers the feature-extraction stage: the residual-block convs
// (and, on the query path, the RefER replacements with their sub-ops),
// weighted by ops * b_w * b_a / (32 * 32) with ops = 2 * MACs. The
// never-quantized head, global-skip and reconstruction-tail convs are
// charged at 32 * 32 into unquantized_bitops_g so the headline number
// scales exactly with the bit schedule: a uniform b-bit plan costs
// exactly b^2/1024 of the 32-bit plan.
//
// fqr is the mean activation bit-width over all (patch, trunk position)
// pairs of the feature stage; params_m counts raw parameters with the
// backbone shared across paths.
struct CostReport {
    double bitops_g = 0.0;
    double fqr = 0.0;
    double params_m = 0.0;
    double unquantized_bitops_g = 0.0;
    int n_ref = 0;
    int n_query = 0;
    std::vector<LayerCost> per_layer;
};

// patch_stats = (n_ref, n_query); image_dims = LR (height, width).
double count_bitops(const InferencePlan& plan, const NetworkConfig& net,
                    std::pair<int, int> image_dims, std::pair<int, int> patch_stats);

double compute_fqr(const InferencePlan& plan, std::pair<int, int> patch_stats);

// Millions of raw parameters: backbone once (paths share weights), one
// refinement head per RefER position, the clustering extractor when the
// plan used clustering.
double count_params(const NetworkConfig& net, const InferencePlan& plan);

CostReport build_cost_report(const InferencePlan& plan, const NetworkConfig& net,
                             std::pair<int, int> image_dims, std::pair<int, int> patch_stats);

} // namespace refqsr
