// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/manifest.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>

#include "json.hpp"

#include "refqsr/errors.hpp"

namespace refqsr {

namespace {

using nlohmann::json;

struct Binding {
    std::string name;
    std::vector<int> shape;
    float* data = nullptr;
    std::size_t count = 0;
};

void bind_tensor(std::vector<Binding>& out, const std::string& name, Tensor& t) {
    out.push_back({name + ".weight",
                   {t.batch(), t.channels(), t.height(), t.width()},
                   t.data(),
                   t.size()});
}

void bind_matrix(std::vector<Binding>& out, const std::string& name, Matrix& m) {
    out.push_back({name + ".weight", {m.rows, m.cols}, m.data.data(), m.data.size()});
}

void bind_bias(std::vector<Binding>& out, const std::string& name, std::vector<float>& b) {
    out.push_back({name + ".bias", {static_cast<int>(b.size())}, b.data(), b.size()});
}

std::vector<Binding> enumerate_bindings(ModelWeights& w) {
    std::vector<Binding> out;
    bind_tensor(out, "backbone.head", w.backbone.head_w);
    bind_bias(out, "backbone.head", w.backbone.head_b);
    for (std::size_t i = 0; i < w.backbone.blocks.size(); ++i) {
        const std::string base = "backbone.block" + std::to_string(i);
        bind_tensor(out, base + ".conv1", w.backbone.blocks[i].conv1_w);
        bind_bias(out, base + ".conv1", w.backbone.blocks[i].conv1_b);
        bind_tensor(out, base + ".conv2", w.backbone.blocks[i].conv2_w);
        bind_bias(out, base + ".conv2", w.backbone.blocks[i].conv2_b);
    }
    bind_tensor(out, "backbone.skip", w.backbone.skip_w);
    bind_bias(out, "backbone.skip", w.backbone.skip_b);
    for (std::size_t i = 0; i < w.backbone.upsample.size(); ++i) {
        const std::string base = "backbone.up" + std::to_string(i);
        bind_tensor(out, base, w.backbone.upsample[i].w);
        bind_bias(out, base, w.backbone.upsample[i].b);
    }
    bind_tensor(out, "backbone.tail", w.backbone.tail_w);
    bind_bias(out, "backbone.tail", w.backbone.tail_b);

    bind_tensor(out, "clustblock.conv1", w.clust.conv1_w);
    bind_bias(out, "clustblock.conv1", w.clust.conv1_b);
    bind_tensor(out, "clustblock.conv2", w.clust.conv2_w);
    bind_bias(out, "clustblock.conv2", w.clust.conv2_b);
    bind_tensor(out, "clustblock.conv3", w.clust.conv3_w);
    bind_bias(out, "clustblock.conv3", w.clust.conv3_b);
    bind_matrix(out, "clustblock.fc", w.clust.fc_w);
    bind_bias(out, "clustblock.fc", w.clust.fc_b);

    for (std::size_t i = 0; i < w.refer_heads.size(); ++i) {
        const std::string base = "refer.head" + std::to_string(i);
        bind_tensor(out, base + ".conv1", w.refer_heads[i].conv1_w);
        bind_bias(out, base + ".conv1", w.refer_heads[i].conv1_b);
        bind_tensor(out, base + ".conv2", w.refer_heads[i].conv2_w);
        bind_bias(out, base + ".conv2", w.refer_heads[i].conv2_b);
    }
    return out;
}

// Zero-shaped weight set matching an architecture.
ModelWeights shape_weights(const NetworkConfig& arch) {
    arch.validate();
    const int c = arch.channels;
    ModelWeights w;
    w.arch = arch;
    w.backbone.head_w = Tensor(c, 3, 3, 3);
    w.backbone.head_b.assign(c, 0.0f);
    w.backbone.blocks.resize(arch.num_resblocks);
    for (auto& blk : w.backbone.blocks) {
        blk.conv1_w = Tensor(c, c, 3, 3);
        blk.conv1_b.assign(c, 0.0f);
        blk.conv2_w = Tensor(c, c, 3, 3);
        blk.conv2_b.assign(c, 0.0f);
    }
    w.backbone.skip_w = Tensor(c, c, 3, 3);
    w.backbone.skip_b.assign(c, 0.0f);
    for (int r : arch.upsample_stages()) {
        BackboneWeights::Upsample up;
        up.w = Tensor(c * r * r, c, 3, 3);
        up.b.assign(c * r * r, 0.0f);
        up.factor = r;
        w.backbone.upsample.push_back(std::move(up));
    }
    w.backbone.tail_w = Tensor(3, c, 3, 3);
    w.backbone.tail_b.assign(3, 0.0f);

    w.clust.conv1_w = Tensor(64, 3, 3, 3);
    w.clust.conv1_b.assign(64, 0.0f);
    w.clust.conv2_w = Tensor(64, 64, 3, 3);
    w.clust.conv2_b.assign(64, 0.0f);
    w.clust.conv3_w = Tensor(32, 64, 3, 3);
    w.clust.conv3_b.assign(32, 0.0f);
    w.clust.fc_w = Matrix(arch.clust_classes, 32);
    w.clust.fc_b.assign(arch.clust_classes, 0.0f);

    w.refer_heads.resize(arch.num_refer_blocks);
    for (auto& head : w.refer_heads) {
        head.conv1_w = Tensor(c / 2, c, 3, 3);
        head.conv1_b.assign(c / 2, 0.0f);
        head.conv2_w = Tensor(c, c / 2, 1, 1);
        head.conv2_b.assign(c, 0.0f);
    }
    return w;
}

NetworkConfig arch_from_json(const json& j) {
    NetworkConfig arch;
    arch.num_resblocks = j.at("num_resblocks").get<int>();
    arch.channels = j.at("channels").get<int>();
    arch.scale_factor = j.at("scale_factor").get<int>();
    arch.num_refer_blocks = j.at("num_refer_blocks").get<int>();
    arch.clust_classes = j.at("clust_classes").get<int>();
    return arch;
}

json arch_to_json(const NetworkConfig& arch) {
    return json{{"num_resblocks", arch.num_resblocks},
                {"channels", arch.channels},
                {"scale_factor", arch.scale_factor},
                {"num_refer_blocks", arch.num_refer_blocks},
                {"clust_classes", arch.clust_classes}};
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::byte> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw LoadError("failed reading " + path.string());
    return bytes;
}

float float_from_le(const std::byte* p) {
    std::uint32_t u = static_cast<std::uint32_t>(std::to_integer<unsigned>(p[0])) |
                      static_cast<std::uint32_t>(std::to_integer<unsigned>(p[1])) << 8 |
                      static_cast<std::uint32_t>(std::to_integer<unsigned>(p[2])) << 16 |
                      static_cast<std::uint32_t>(std::to_integer<unsigned>(p[3])) << 24;
    return std::bit_cast<float>(u);
}

void float_to_le(float f, std::byte* p) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    p[0] = static_cast<std::byte>(u & 0xff);
    p[1] = static_cast<std::byte>((u >> 8) & 0xff);
    p[2] = static_cast<std::byte>((u >> 16) & 0xff);
    p[3] = static_cast<std::byte>((u >> 24) & 0xff);
}

} // namespace

std::uint64_t WeightManifest::TensorEntry::element_count() const {
    std::uint64_t n = 1;
    for (int d : shape) n *= static_cast<std::uint64_t>(d);
    return n;
}

std::vector<std::string> manifest_layer_names(const NetworkConfig& arch) {
    ModelWeights w = shape_weights(arch);
    std::vector<std::string> names;
    for (const Binding& b : enumerate_bindings(w)) names.push_back(b.name);
    return names;
}

ModelWeights load_weights(const std::filesystem::path& manifest_path,
                          const std::filesystem::path& blob_path) {
    json j;
    {
        std::ifstream in(manifest_path);
        if (!in) throw LoadError("cannot open manifest " + manifest_path.string());
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw LoadError("manifest " + manifest_path.string() + ": " + e.what());
        }
    }
    const int version = j.at("format_version").get<int>();
    if (version != 1) {
        throw LoadError("unsupported manifest format_version " + std::to_string(version));
    }
    ModelWeights weights = shape_weights(arch_from_json(j.at("arch")));

    std::filesystem::path blob = blob_path;
    if (blob.empty()) {
        blob = manifest_path.parent_path() / j.value("blob", "weights.bin");
    }
    const std::vector<std::byte> bytes = read_file(blob);

    // Index manifest entries by name, checking dense ascending packing.
    std::map<std::string, WeightManifest::TensorEntry> entries;
    std::uint64_t expected_offset = 0;
    for (const json& tj : j.at("tensors")) {
        WeightManifest::TensorEntry e;
        e.name = tj.at("name").get<std::string>();
        e.shape = tj.at("shape").get<std::vector<int>>();
        e.byte_offset = tj.at("byte_offset").get<std::uint64_t>();
        if (e.byte_offset != expected_offset) {
            throw LoadError("tensor " + e.name + ": offset " + std::to_string(e.byte_offset) +
                            " overlaps or leaves a gap (expected " +
                            std::to_string(expected_offset) + ")");
        }
        expected_offset += e.element_count() * 4;
        if (!entries.emplace(e.name, e).second) {
            throw LoadError("tensor " + e.name + ": duplicate manifest entry");
        }
    }
    if (expected_offset != bytes.size()) {
        // Name the first tensor whose extent exceeds the blob.
        for (const json& tj : j.at("tensors")) {
            const std::string name = tj.at("name").get<std::string>();
            const WeightManifest::TensorEntry& e = entries.at(name);
            if (e.byte_offset + e.element_count() * 4 > bytes.size()) {
                throw LoadError("blob " + blob.string() + " truncated: tensor " + name +
                                " needs bytes [" + std::to_string(e.byte_offset) + ", " +
                                std::to_string(e.byte_offset + e.element_count() * 4) +
                                "), blob has " + std::to_string(bytes.size()));
            }
        }
        throw LoadError("blob " + blob.string() + " has trailing bytes: expected " +
                        std::to_string(expected_offset) + ", got " +
                        std::to_string(bytes.size()));
    }

    for (Binding& b : enumerate_bindings(weights)) {
        const auto it = entries.find(b.name);
        if (it == entries.end()) throw LoadError("manifest is missing tensor " + b.name);
        const WeightManifest::TensorEntry& e = it->second;
        if (e.shape != b.shape) {
            throw LoadError("tensor " + b.name + ": manifest shape does not match architecture");
        }
        const std::byte* src = bytes.data() + e.byte_offset;
        for (std::size_t i = 0; i < b.count; ++i) b.data[i] = float_from_le(src + i * 4);
    }

    if (j.contains("quant_params")) {
        for (const auto& [name, qp] : j.at("quant_params").items()) {
            weights.act_bounds[name] = {qp.at("alpha").get<float>(), qp.at("beta").get<float>()};
        }
    }
    if (weights.act_bounds.empty()) {
        std::cerr << "warning: manifest " << manifest_path.string()
                  << " carries no activation bounds; layers calibrate min/max dynamically\n";
    }
    return weights;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& manifest_path,
                  const std::filesystem::path& blob_path) {
    ModelWeights copy = weights;
    std::vector<Binding> bindings = enumerate_bindings(copy);

    json tensors = json::array();
    std::uint64_t offset = 0;
    std::vector<std::byte> bytes;
    for (const Binding& b : bindings) {
        tensors.push_back({{"name", b.name}, {"shape", b.shape}, {"byte_offset", offset}});
        bytes.resize(bytes.size() + b.count * 4);
        for (std::size_t i = 0; i < b.count; ++i) {
            float_to_le(b.data[i], bytes.data() + offset + i * 4);
        }
        offset += b.count * 4;
    }

    json j;
    j["format_version"] = 1;
    j["arch"] = arch_to_json(weights.arch);
    j["blob"] = blob_path.filename().string();
    j["tensors"] = tensors;
    if (!weights.act_bounds.empty()) {
        json qp = json::object();
        for (const auto& [name, ab] : weights.act_bounds) {
            qp[name] = {{"alpha", ab.first}, {"beta", ab.second}};
        }
        j["quant_params"] = qp;
    }

    {
        std::ofstream out(blob_path, std::ios::binary);
        if (!out) throw LoadError("cannot write blob " + blob_path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    {
        std::ofstream out(manifest_path);
        if (!out) throw LoadError("cannot write manifest " + manifest_path.string());
        out << j.dump(2) << "\n";
    }
}

namespace {

// Platform-independent uniform floats from mt19937 words.
class UnitRng {
public:
    explicit UnitRng(std::uint32_t seed) : rng_(seed) {}

    float uniform() { return static_cast<float>(rng_() >> 8) * (1.0f / 16777216.0f); }
    float symmetric(float limit) { return (2.0f * uniform() - 1.0f) * limit; }

private:
    std::mt19937 rng_;
};

void fill_xavier(Tensor& w, UnitRng& rng, float gain = 1.0f) {
    const float fan_in = static_cast<float>(w.channels() * w.height() * w.width());
    const float fan_out = static_cast<float>(w.batch() * w.height() * w.width());
    const float limit = gain * std::sqrt(6.0f / (fan_in + fan_out));
    for (float& v : w.values()) v = rng.symmetric(limit);
}

void fill_xavier(Matrix& w, UnitRng& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(w.rows + w.cols));
    for (float& v : w.data) v = rng.symmetric(limit);
}

} // namespace

ModelWeights init_random_weights(const NetworkConfig& arch, std::uint32_t seed) {
    ModelWeights w = shape_weights(arch);
    UnitRng rng(seed);
    fill_xavier(w.backbone.head_w, rng);
    for (auto& blk : w.backbone.blocks) {
        fill_xavier(blk.conv1_w, rng);
        fill_xavier(blk.conv2_w, rng, 0.1f); // damped residual branch
    }
    fill_xavier(w.backbone.skip_w, rng, 0.1f);
    for (auto& up : w.backbone.upsample) fill_xavier(up.w, rng);
    fill_xavier(w.backbone.tail_w, rng);

    fill_xavier(w.clust.conv1_w, rng);
    fill_xavier(w.clust.conv2_w, rng);
    fill_xavier(w.clust.conv3_w, rng);
    fill_xavier(w.clust.fc_w, rng);

    for (auto& head : w.refer_heads) {
        fill_xavier(head.conv1_w, rng);
        // Zero-initialized final conv: a fresh refinement head starts as
        // the identity correction.
    }
    return w;
}

} // namespace refqsr
