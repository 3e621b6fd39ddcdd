// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/plan.hpp"

#include <string>

#include "refqsr/errors.hpp"

namespace refqsr {

void NetworkConfig::validate() const {
    if (num_resblocks < 2) throw PolicyError("NetworkConfig: need at least 2 residual blocks");
    if (channels < 2 || channels % 2 != 0) {
        throw PolicyError("NetworkConfig: channels must be even and >= 2");
    }
    if (scale_factor != 2 && scale_factor != 3 && scale_factor != 4) {
        throw PolicyError("NetworkConfig: scale factor must be 2, 3, or 4");
    }
    if (num_refer_blocks < 0 || num_refer_blocks >= num_resblocks) {
        throw PolicyError("NetworkConfig: refer blocks must satisfy 0 <= K < num_resblocks");
    }
    if (clust_classes < 1) throw PolicyError("NetworkConfig: clust_classes must be >= 1");
}

std::vector<int> NetworkConfig::upsample_stages() const {
    if (scale_factor == 4) return {2, 2};
    if (scale_factor == 1) return {};
    return {scale_factor};
}

void TilingConfig::validate() const {
    if (patch_size < 1 || overlap < 0) throw PolicyError("TilingConfig: invalid sizes");
    if (patch_size <= 2 * overlap) {
        throw PolicyError("TilingConfig: patch_size must exceed twice the overlap, got patch " +
                          std::to_string(patch_size) + ", overlap " + std::to_string(overlap));
    }
}

namespace {

int override_or(const BitPolicy& policy, int position, int bits) {
    const auto it = policy.per_layer_override.find(position);
    return it == policy.per_layer_override.end() ? bits : it->second;
}

} // namespace

InferencePlan build_plan(const NetworkConfig& net, const BitPolicy& policy,
                         ClusterAssignment assignment, int patch_h, int patch_w,
                         bool use_refer) {
    net.validate();
    InferencePlan plan;
    plan.assignment = std::move(assignment);
    plan.policy = policy;
    plan.patch_h = patch_h;
    plan.patch_w = patch_w;
    plan.clustering_enabled = true;

    const int n = net.num_resblocks;
    const int k = use_refer ? net.num_refer_blocks : 0;
    plan.reference_schedule.resize(n);
    plan.query_schedule.resize(n);
    for (int i = 0; i < n; ++i) {
        const int high = override_or(policy, i, policy.b_high);
        plan.reference_schedule[i] = {high, high, false};
        if (i == 0) {
            plan.query_schedule[i] = {high, high, false};
        } else if (i >= n - k) {
            plan.query_schedule[i] = {high, high, true};
            plan.refer_positions.push_back(i);
        } else {
            plan.query_schedule[i] = {policy.b_medium, policy.b_low, false};
        }
    }
    return plan;
}

InferencePlan uniform_plan(const NetworkConfig& net, int bits, int patch_h, int patch_w) {
    net.validate();
    InferencePlan plan;
    plan.policy.b_high = bits;
    plan.policy.b_low = bits;
    plan.policy.b_medium = bits;
    plan.assignment.ref_of = {0};
    plan.assignment.reference_set = {0};
    plan.assignment.similarity = {1.0f};
    plan.patch_h = patch_h;
    plan.patch_w = patch_w;
    plan.reference_schedule.assign(net.num_resblocks, BlockBits{bits, bits, false});
    plan.query_schedule = plan.reference_schedule;
    return plan;
}

} // namespace refqsr
