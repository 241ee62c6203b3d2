// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/formats.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

namespace tnrf {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path &path, const std::vector<std::uint8_t> &bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::uint8_t> encode_transient(const TransientImage &image) {
    ByteWriter w;
    w.reserve(25 + image.size() * 4);
    w.magic("TRNS");
    w.u32(kTransientFormatVersion);
    w.u32(std::uint32_t(image.height()));
    w.u32(std::uint32_t(image.width()));
    w.u32(std::uint32_t(image.n_bins()));
    w.u32(std::uint32_t(image.channels()));
    w.u8(std::uint8_t(image.kind()));
    for (double v : image.data())
        w.f32(float(v));
    return w.bytes();
}

TransientImage decode_transient(std::vector<std::uint8_t> bytes, const std::string &source) {
    ByteReader r(std::move(bytes), source);
    r.expect_magic("TRNS");
    if (std::uint32_t version = r.u32(); version != kTransientFormatVersion)
        r.fail("unsupported TRNS version " + std::to_string(version));
    std::uint32_t h = r.u32(), w = r.u32(), bins = r.u32(), ch = r.u32();
    std::uint8_t kind = r.u8();
    if (kind > 2)
        r.fail("unknown transient kind " + std::to_string(kind));
    if (h == 0 || w == 0 || bins == 0 || (ch != 1 && ch != 3))
        r.fail("invalid TRNS dimensions");
    if (r.remaining() != std::size_t(h) * w * bins * ch * 4)
        r.fail("payload size does not match header");
    TransientImage img{int(h), int(w), int(bins), int(ch), TransientKind(kind)};
    for (double &v : img.data())
        v = r.f32();
    return img;
}

void write_transient(const std::filesystem::path &path, const TransientImage &image) {
    write_file_bytes(path, encode_transient(image));
}

TransientImage read_transient(const std::filesystem::path &path) {
    return decode_transient(read_file_bytes(path), path.string());
}

std::vector<std::uint8_t> encode_image(const Image &image) {
    ByteWriter w;
    w.reserve(20 + image.data.size() * 4);
    w.magic("TIMG");
    w.u32(kImageFormatVersion);
    w.u32(std::uint32_t(image.height));
    w.u32(std::uint32_t(image.width));
    w.u32(std::uint32_t(image.channels));
    for (double v : image.data)
        w.f32(float(v));
    return w.bytes();
}

Image decode_image(std::vector<std::uint8_t> bytes, const std::string &source) {
    ByteReader r(std::move(bytes), source);
    r.expect_magic("TIMG");
    if (std::uint32_t version = r.u32(); version != kImageFormatVersion)
        r.fail("unsupported TIMG version " + std::to_string(version));
    std::uint32_t h = r.u32(), w = r.u32(), ch = r.u32();
    if (h == 0 || w == 0 || ch == 0)
        r.fail("invalid TIMG dimensions");
    if (r.remaining() != std::size_t(h) * w * ch * 4)
        r.fail("payload size does not match header");
    Image img{int(h), int(w), int(ch)};
    for (double &v : img.data)
        v = r.f32();
    return img;
}

void write_image(const std::filesystem::path &path, const Image &image) {
    write_file_bytes(path, encode_image(image));
}

Image read_image(const std::filesystem::path &path) {
    return decode_image(read_file_bytes(path), path.string());
}

void write_pgm_preview(const std::filesystem::path &path, const Image &image, int channel) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = 0; i < image.height; ++i)
        for (int j = 0; j < image.width; ++j) {
            double v = image.at(i, j, channel);
            if (v < 0)
                continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "P2\n" << image.width << ' ' << image.height << "\n255\n";
    for (int i = 0; i < image.height; ++i) {
        for (int j = 0; j < image.width; ++j) {
            double v = image.at(i, j, channel);
            int g = 0;
            if (v >= 0 && hi > lo)
                g = int(std::lround(255.0 * (v - lo) / (hi - lo)));
            else if (v >= 0 && hi >= 0)
                g = 255;
            out << g << (j + 1 < image.width ? ' ' : '\n');
        }
    }
}

Image integrate_intensity(const TransientImage &transient) {
    Image out(transient.height(), transient.width(), transient.channels());
    const int ch = transient.channels();
    for (int i = 0; i < transient.height(); ++i)
        for (int j = 0; j < transient.width(); ++j) {
            auto px = transient.pixel(i, j);
            for (int n = 0; n < transient.n_bins(); ++n)
                for (int c = 0; c < ch; ++c)
                    out.at(i, j, c) += px[std::size_t(n) * ch + c];
        }
    return out;
}

}  // namespace tnrf
