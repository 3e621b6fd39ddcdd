// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/cost_model.hpp"

#include <string>

#include "refqsr/errors.hpp"

namespace refqsr {

namespace {

constexpr double kGiga = 1e9;

double conv_ops(int h, int w, int c_in, int c_out, int kernel) {
    // multiply + accumulate counted separately
    return 2.0 * h * w * c_in * c_out * kernel * kernel;
}

double bitops(double ops, int w_bits, int a_bits) {
    return ops * (static_cast<double>(w_bits) * a_bits) / 1024.0;
}

struct Accounting {
    std::vector<LayerCost>* layers = nullptr;
    double total = 0.0;

    void add(const std::string& name, const std::string& path, int count, double ops, int w_bits,
             int a_bits) {
        if (count == 0) return;
        const double g = count * bitops(ops, w_bits, a_bits) / kGiga;
        total += count * bitops(ops, w_bits, a_bits);
        if (layers) layers->push_back({name, path, count, ops, w_bits, a_bits, g});
    }
};

void account_path(Accounting& acc, const std::vector<BlockBits>& schedule,
                  const NetworkConfig& net, const BitPolicy& policy, const std::string& path,
                  int count, int ph, int pw) {
    const int c = net.channels;
    const double block_ops = 2.0 * conv_ops(ph, pw, c, c, 3);
    const int pooled_h = (ph + 2) / 3;
    const int pooled_w = (pw + 2) / 3;
    const double pooled_positions = static_cast<double>(pooled_h) * pooled_w;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const BlockBits& bits = schedule[i];
        const std::string id = "block" + std::to_string(i);
        if (!bits.is_refer) {
            acc.add(id, path, count, block_ops, bits.weight_bits, bits.act_bits);
            continue;
        }
        // Matching runs on the b_low-preprocessed features; warping reads
        // the high-precision reference feature; the head convs run at the
        // scheduled (high) bits.
        const int b_low = policy.b_low;
        acc.add(id + ".preprocess", path, count, 2.0 * 4.0 * c * ph * pw, b_low, b_low);
        acc.add(id + ".cost_volume", path, count, 2.0 * c * pooled_positions * pooled_positions,
                b_low, b_low);
        acc.add(id + ".flow", path, count, 6.0 * pooled_positions * pooled_positions, b_low,
                b_low);
        acc.add(id + ".warp", path, count, 8.0 * (c + 2.0) * ph * pw, bits.weight_bits,
                bits.act_bits);
        acc.add(id + ".head.conv1", path, count, conv_ops(ph, pw, c, c / 2, 3), bits.weight_bits,
                bits.act_bits);
        acc.add(id + ".head.conv2", path, count, conv_ops(ph, pw, c / 2, c, 1), bits.weight_bits,
                bits.act_bits);
    }
}

void validate_stats(const InferencePlan& plan, std::pair<int, int> image_dims,
                    std::pair<int, int> patch_stats) {
    const auto [n_ref, n_query] = patch_stats;
    if (n_ref < 0 || n_query < 0 || n_ref + n_query < 1) {
        throw DimensionError("cost model: patch stats must cover at least one patch");
    }
    if (plan.patch_h < 1 || plan.patch_w < 1) {
        throw DimensionError("cost model: plan carries no patch geometry");
    }
    if (plan.assignment.count() > 1 && n_ref + n_query != plan.assignment.count()) {
        throw DimensionError("cost model: patch stats disagree with the plan's assignment");
    }
    if (image_dims.first < plan.patch_h || image_dims.second < plan.patch_w) {
        throw DimensionError("cost model: image smaller than the plan's patch size");
    }
}

} // namespace

double count_bitops(const InferencePlan& plan, const NetworkConfig& net,
                    std::pair<int, int> image_dims, std::pair<int, int> patch_stats) {
    validate_stats(plan, image_dims, patch_stats);
    Accounting acc;
    account_path(acc, plan.reference_schedule, net, plan.policy, "reference", patch_stats.first,
                 plan.patch_h, plan.patch_w);
    account_path(acc, plan.query_schedule, net, plan.policy, "query", patch_stats.second,
                 plan.patch_h, plan.patch_w);
    return acc.total / kGiga;
}

double compute_fqr(const InferencePlan& plan, std::pair<int, int> patch_stats) {
    const auto [n_ref, n_query] = patch_stats;
    if (n_ref < 0 || n_query < 0 || n_ref + n_query < 1) {
        throw DimensionError("compute_fqr: patch stats must cover at least one patch");
    }
    double sum = 0.0;
    double entries = 0.0;
    for (const BlockBits& bits : plan.reference_schedule) {
        sum += static_cast<double>(n_ref) * bits.act_bits;
        entries += n_ref;
    }
    for (const BlockBits& bits : plan.query_schedule) {
        sum += static_cast<double>(n_query) * bits.act_bits;
        entries += n_query;
    }
    return entries == 0.0 ? 0.0 : sum / entries;
}

double count_params(const NetworkConfig& net, const InferencePlan& plan) {
    net.validate();
    const double c = net.channels;
    double params = 0.0;
    params += 9.0 * 3.0 * c + c;                              // head conv
    params += net.num_resblocks * 2.0 * (9.0 * c * c + c);    // trunk
    params += 9.0 * c * c + c;                                // global-skip conv
    for (int r : net.upsample_stages()) {
        params += 9.0 * c * (c * r * r) + c * r * r;
    }
    params += 9.0 * c * 3.0 + 3.0;                            // reconstruction conv
    params += static_cast<double>(plan.refer_positions.size()) *
              (9.0 * c * (c / 2) + c / 2 + (c / 2) * c + c);
    if (plan.clustering_enabled) {
        const double classes = net.clust_classes;
        params += 27.0 * 64 + 64;          // conv1: 3 -> 64
        params += 9.0 * 64 * 64 + 64;      // conv2: 64 -> 64
        params += 9.0 * 64 * 32 + 32;      // conv3: 64 -> 32
        params += 32.0 * classes + classes; // fc: 32 -> classes
    }
    return params / 1e6;
}

CostReport build_cost_report(const InferencePlan& plan, const NetworkConfig& net,
                             std::pair<int, int> image_dims, std::pair<int, int> patch_stats) {
    validate_stats(plan, image_dims, patch_stats);
    CostReport report;
    report.n_ref = patch_stats.first;
    report.n_query = patch_stats.second;

    Accounting acc;
    acc.layers = &report.per_layer;
    account_path(acc, plan.reference_schedule, net, plan.policy, "reference", patch_stats.first,
                 plan.patch_h, plan.patch_w);
    account_path(acc, plan.query_schedule, net, plan.policy, "query", patch_stats.second,
                 plan.patch_h, plan.patch_w);
    report.bitops_g = acc.total / kGiga;
    report.fqr = compute_fqr(plan, patch_stats);
    report.params_m = count_params(net, plan);

    // Never-quantized layers, charged at full precision.
    const int patches = patch_stats.first + patch_stats.second;
    const int c = net.channels;
    const int ph = plan.patch_h;
    const int pw = plan.patch_w;
    double unq = conv_ops(ph, pw, 3, c, 3);  // head
    unq += conv_ops(ph, pw, c, c, 3);        // global skip
    int h = ph;
    int w = pw;
    for (int r : net.upsample_stages()) {
        unq += conv_ops(h, w, c, c * r * r, 3);
        h *= r;
        w *= r;
    }
    unq += conv_ops(h, w, c, 3, 3); // reconstruction
    report.unquantized_bitops_g = patches * unq / kGiga;
    return report;
}

} // namespace refqsr
