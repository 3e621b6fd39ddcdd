// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "refqsr/weights.hpp"

namespace refqsr {

// JSON sidecar describing a raw little-endian float32 blob. Tensor
// entries are densely packed in ascending offset order; every layer of
// the architecture has exactly one entry. quant_params carries optional
// per-layer activation clipping bounds.
struct WeightManifest {
    struct TensorEntry {
        std::string name;
        std::vector<int> shape;
        std::uint64_t byte_offset = 0;

        std::uint64_t element_count() const;
    };

    int format_version = 1;
    NetworkConfig arch;
    std::string blob_file; // relative to the manifest's directory
    std::vector<TensorEntry> tensors;
    std::map<std::string, std::pair<float, float>> quant_params;
};

// Fully materialize and validate a weight set. blob_path overrides the
// manifest's blob_file when non-empty. Throws LoadError naming the
// offending tensor on overlap, shape mismatch, or truncation.
ModelWeights load_weights(const std::filesystem::path& manifest_path,
                          const std::filesystem::path& blob_path = {});

void save_weights(const ModelWeights& weights, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path);

// Deterministic random weight set for desk-scale runs: Xavier-uniform
// convs generated from a platform-independent integer PRNG, residual
// branches damped (second conv of each block scaled down, refinement
// heads ending in a zero conv) so a deep random trunk stays stable.
ModelWeights init_random_weights(const NetworkConfig& arch, std::uint32_t seed);

// The canonical layer-name order of a manifest for this architecture.
std::vector<std::string> manifest_layer_names(const NetworkConfig& arch);

} // namespace refqsr
