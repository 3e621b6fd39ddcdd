// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace refqsr {

// SRResNet-style backbone layout: unquantized 3x3 conv head, a trunk of
// residual blocks (conv-relu-conv plus skip), an unquantized global-skip
// conv, then conv + pixel-shuffle upsampling stages and a final
// reconstruction conv. Only the residual-block convs are quantized; they
// are the feature-extraction stage the cost model accounts.
struct NetworkConfig {
    int num_resblocks = 16;
    int channels = 64;
    int scale_factor = 4; // one of 2, 3, 4
    int num_refer_blocks = 2;
    int clust_classes = 47;

    void validate() const;

    // Pixel-shuffle factors of the reconstruction tail (x4 -> {2, 2}).
    std::vector<int> upsample_stages() const;
};

struct TilingConfig {
    int patch_size = 96;
    int overlap = 6;

    void validate() const;
};

} // namespace refqsr
