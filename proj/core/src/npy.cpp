// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/npy.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>

#include "refqsr/errors.hpp"

namespace refqsr {

void save_npy(const std::filesystem::path& path, std::span<const std::size_t> shape,
              std::span<const float> data) {
    std::size_t count = 1;
    std::string dims;
    for (std::size_t d : shape) {
        count *= d;
        dims += std::to_string(d) + ",";
    }
    if (shape.size() > 1 && !dims.empty()) dims.pop_back();
    if (count != data.size()) throw DimensionError("save_npy: shape does not match data length");

    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + dims + "), }";
    const std::size_t unpadded = 10 + header.size() + 1;
    const std::size_t padded = (unpadded + 63) / 64 * 64;
    header.append(padded - unpadded, ' ');
    header += '\n';

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "\x93NUMPY";
    out.put('\x01');
    out.put('\x00');
    const std::uint16_t len = static_cast<std::uint16_t>(header.size());
    out.put(static_cast<char>(len & 0xff));
    out.put(static_cast<char>(len >> 8));
    out << header;
    for (float v : data) {
        const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
        out.put(static_cast<char>(u & 0xff));
        out.put(static_cast<char>((u >> 8) & 0xff));
        out.put(static_cast<char>((u >> 16) & 0xff));
        out.put(static_cast<char>((u >> 24) & 0xff));
    }
    if (!out) throw ParseError("failed writing " + path.string());
}

} // namespace refqsr
