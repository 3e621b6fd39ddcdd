// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "refqsr/clustblock.hpp"
#include "refqsr/config.hpp"
#include "refqsr/refer.hpp"
#include "refqsr/tensor.hpp"

namespace refqsr {

// SRResNet-style backbone parameters. The residual-block convs are the
// quantized trunk; head, global skip, upsample and reconstruction convs
// always run in full precision.
struct BackboneWeights {
    struct ResBlock {
        Tensor conv1_w;
        std::vector<float> conv1_b;
        Tensor conv2_w;
        std::vector<float> conv2_b;
    };
    struct Upsample {
        Tensor w;
        std::vector<float> b;
        int factor = 2;
    };

    Tensor head_w;
    std::vector<float> head_b;
    std::vector<ResBlock> blocks;
    Tensor skip_w;
    std::vector<float> skip_b;
    std::vector<Upsample> upsample;
    Tensor tail_w;
    std::vector<float> tail_b;
};

// Everything a run needs: the shared backbone, the clustering extractor,
// one refinement head per RefER position, and optional per-layer
// activation clipping bounds keyed by layer name (e.g.
// "backbone.block3.conv1.act"). Layers without bounds calibrate
// dynamically from the observed tensor.
struct ModelWeights {
    NetworkConfig arch;
    BackboneWeights backbone;
    ClustBlockWeights clust;
    std::vector<ReferHead> refer_heads;
    std::map<std::string, std::pair<float, float>> act_bounds;
};

} // namespace refqsr
