// Copyright 2026 The refqsr authors
// SPDX-License-Identifier: Apache-2.0

#include "refqsr/ppm.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "refqsr/errors.hpp"

namespace refqsr {

namespace {

class ByteReader {
public:
    explicit ByteReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ParseError("cannot open " + path_);
        in.seekg(0, std::ios::end);
        bytes_.resize(static_cast<std::size_t>(in.tellg()));
        in.seekg(0, std::ios::beg);
        in.read(reinterpret_cast<char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
        if (!in) throw ParseError("failed reading " + path_);
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path_ + ": " + what + " at byte " + std::to_string(pos_));
    }

    void skip_whitespace_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = static_cast<char>(bytes_[pos_]);
            if (c == '#') {
                while (pos_ < bytes_.size() && static_cast<char>(bytes_[pos_]) != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos_;
            } else {
                return;
            }
        }
    }

    int read_int() {
        skip_whitespace_and_comments();
        if (pos_ >= bytes_.size() || !isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            fail("expected integer");
        }
        long v = 0;
        while (pos_ < bytes_.size() && isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1 << 30) fail("integer out of range");
            ++pos_;
        }
        return static_cast<int>(v);
    }

    unsigned char take() {
        if (pos_ >= bytes_.size()) fail("unexpected end of file");
        return bytes_[pos_++];
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t pos() const { return pos_; }

private:
    std::string path_;
    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

Tensor load_ppm(const std::filesystem::path& path) {
    ByteReader r(path);
    const unsigned char m0 = r.take();
    const unsigned char m1 = r.take();
    if (m0 != 'P' || m1 != '6') {
        throw ParseError(path.string() + ": bad magic '" + static_cast<char>(m0) +
                         static_cast<char>(m1) + "', expected binary PPM 'P6' at byte 0");
    }
    const int width = r.read_int();
    const int height = r.read_int();
    const int maxval = r.read_int();
    if (width < 1 || height < 1) r.fail("invalid dimensions");
    if (maxval != 255) r.fail("unsupported maxval " + std::to_string(maxval) + " (only 255)");
    // Single whitespace byte separates the header from the raster.
    const unsigned char sep = r.take();
    if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r') r.fail("missing raster separator");
    const std::size_t need = static_cast<std::size_t>(width) * height * 3;
    if (r.remaining() < need) {
        throw ParseError(path.string() + ": raster truncated at byte " + std::to_string(r.pos()) +
                         " (need " + std::to_string(need) + " bytes, have " +
                         std::to_string(r.remaining()) + ")");
    }
    Tensor image(1, 3, height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                image.at(0, c, y, x) = static_cast<float>(r.take()) / 255.0f;
            }
        }
    }
    return image;
}

void save_ppm(const Tensor& image, const std::filesystem::path& path) {
    if (image.batch() != 1 || image.channels() != 3) {
        throw DimensionError("save_ppm: expected a 1 x 3 x H x W tensor");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width()) * 3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = image.at(0, c, y, x) * 255.0f;
                const float q = std::floor(v + 0.5f); // round half up
                row[static_cast<std::size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::min(std::max(q, 0.0f), 255.0f));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw ParseError("failed writing " + path.string());
}

} // namespace refqsr
