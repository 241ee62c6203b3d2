// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

// On-disk formats:
//   .trns  "TRNS", u32 version=1, u32 H, W, n_bins, channels, u8 kind,
//          then f32[H][W][bin][channel]
//   .timg  "TIMG", u32 version=1, u32 H, W, channels, then f32[H][W][channel]
// All little-endian.

#pragma once

#include <tnrf/binary_io.h>
#include <tnrf/core.h>

#include <filesystem>
#include <vector>

namespace tnrf {

inline constexpr std::uint32_t kTransientFormatVersion = 1;
inline constexpr std::uint32_t kImageFormatVersion = 1;

// Row-major H x W x channels image (depth or intensity).
struct Image {
    int height = 0, width = 0, channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c), data(std::size_t(h) * w * c, fill) {}

    double &at(int i, int j, int c = 0) { return data[(std::size_t(i) * width + j) * channels + c]; }
    double at(int i, int j, int c = 0) const {
        return data[(std::size_t(i) * width + j) * channels + c];
    }
    bool operator==(const Image &) const = default;
};

std::vector<std::uint8_t> encode_transient(const TransientImage &image);
TransientImage decode_transient(std::vector<std::uint8_t> bytes, const std::string &source = {});
void write_transient(const std::filesystem::path &path, const TransientImage &image);
TransientImage read_transient(const std::filesystem::path &path);

std::vector<std::uint8_t> encode_image(const Image &image);
Image decode_image(std::vector<std::uint8_t> bytes, const std::string &source = {});
void write_image(const std::filesystem::path &path, const Image &image);
Image read_image(const std::filesystem::path &path);

// ASCII portable graymap (P2) of one channel, scaled so [lo, hi] maps to
// [0, 255]. Values below `lo` (e.g. invalid depths) render black.
void write_pgm_preview(const std::filesystem::path &path, const Image &image, int channel = 0);

// Per-pixel sum over time bins.
Image integrate_intensity(const TransientImage &transient);

}  // namespace tnrf
