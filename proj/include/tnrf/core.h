// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

// Shared domain types for time-resolved lidar: the time axis and its bin
// splatting, transient images, the lidar impulse response, noise parameters
// and time-domain convolution.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tnrf {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Reserved value in depth images for pixels without a valid depth.
inline constexpr double kInvalidDepth = -1.0;

// Temporal discretization. Bin n covers round-trip times
// [t_offset + n * bin_width, t_offset + (n + 1) * bin_width).
class TimeAxis {
  public:
    TimeAxis(int n_bins, double bin_width, double t_offset = 0.0);

    int n_bins() const { return n_bins_; }
    double bin_width() const { return bin_width_; }
    double t_offset() const { return t_offset_; }
    static constexpr double speed_of_light() { return kSpeedOfLight; }

    double fractional_bin(double round_trip_time) const {
        return (round_trip_time - t_offset_) / bin_width_;
    }
    // Fractional bin for a surface at one-way distance d (round trip 2d/c).
    double fractional_bin_of_distance(double distance) const {
        return fractional_bin(2.0 * distance / kSpeedOfLight);
    }
    // Bin containing the round trip to one-way distance d; may be out of range.
    std::int64_t bin_of_distance(double distance) const;

    double bin_center_time(int n) const { return t_offset_ + (n + 0.5) * bin_width_; }
    double bin_center_distance(int n) const { return 0.5 * bin_center_time(n) * kSpeedOfLight; }
    // One-way distance covered by a single bin.
    double bin_distance() const { return 0.5 * bin_width_ * kSpeedOfLight; }

    bool operator==(const TimeAxis &) const = default;

  private:
    int n_bins_;
    double bin_width_;
    double t_offset_;
};

double fractional_bin(const TimeAxis &axis, double round_trip_time);

struct SplatWeights {
    std::int64_t bin_lo;
    double w_lo;
    double w_hi;
};

// Linear two-bin split of a unit contribution at a fractional bin coordinate.
SplatWeights splat_weights(double fractional_bin);

// Splat `value` for a return at fractional bin coordinate `x` into a per-bin
// buffer with `channels` interleaved channels. Integer coordinates are bin
// edges, so the split is done about bin centers (x - 0.5). Out-of-range bins
// are dropped.
inline void splat_into(std::span<double> bins, int n_bins, int channels, double x,
                       const double *value) {
    SplatWeights sw = splat_weights(x - 0.5);
    if (sw.bin_lo >= 0 && sw.bin_lo < n_bins)
        for (int c = 0; c < channels; ++c)
            bins[sw.bin_lo * channels + c] += sw.w_lo * value[c];
    std::int64_t hi = sw.bin_lo + 1;
    if (hi >= 0 && hi < n_bins)
        for (int c = 0; c < channels; ++c)
            bins[hi * channels + c] += sw.w_hi * value[c];
}

// Adjoint of splat_into: returns per-channel sum of weighted bin adjoints.
inline void gather_from(std::span<const double> bins, int n_bins, int channels, double x,
                        double *out) {
    SplatWeights sw = splat_weights(x - 0.5);
    for (int c = 0; c < channels; ++c)
        out[c] = 0;
    if (sw.bin_lo >= 0 && sw.bin_lo < n_bins)
        for (int c = 0; c < channels; ++c)
            out[c] += sw.w_lo * bins[sw.bin_lo * channels + c];
    std::int64_t hi = sw.bin_lo + 1;
    if (hi >= 0 && hi < n_bins)
        for (int c = 0; c < channels; ++c)
            out[c] += sw.w_hi * bins[hi * channels + c];
}

enum class TransientKind : std::uint8_t { Rate = 0, Clean = 1, NoisyCounts = 2 };

std::string_view to_string(TransientKind kind);

// H x W x n_bins x channels array of photon rates or counts, row-major.
class TransientImage {
  public:
    TransientImage() = default;
    TransientImage(int height, int width, int n_bins, int channels, TransientKind kind);

    int height() const { return height_; }
    int width() const { return width_; }
    int n_bins() const { return n_bins_; }
    int channels() const { return channels_; }
    TransientKind kind() const { return kind_; }
    void set_kind(TransientKind kind) { kind_ = kind; }

    std::size_t pixel_stride() const { return std::size_t(n_bins_) * channels_; }
    std::size_t size() const { return data_.size(); }

    std::span<double> pixel(int i, int j) {
        return {data_.data() + (std::size_t(i) * width_ + j) * pixel_stride(), pixel_stride()};
    }
    std::span<const double> pixel(int i, int j) const {
        return {data_.data() + (std::size_t(i) * width_ + j) * pixel_stride(), pixel_stride()};
    }
    double &at(int i, int j, int n, int c) {
        return data_[(std::size_t(i) * width_ + j) * pixel_stride() + std::size_t(n) * channels_ + c];
    }
    double at(int i, int j, int n, int c) const {
        return data_[(std::size_t(i) * width_ + j) * pixel_stride() + std::size_t(n) * channels_ + c];
    }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    // Checks nonnegativity and, for noisy counts, integrality.
    void validate() const;

    bool operator==(const TransientImage &) const = default;

  private:
    int height_ = 0, width_ = 0, n_bins_ = 0, channels_ = 1;
    TransientKind kind_ = TransientKind::Rate;
    std::vector<double> data_;
};

// Discrete temporal response of the lidar with an explicit zero-delay tap.
class ImpulseResponse {
  public:
    ImpulseResponse(std::vector<double> kernel, int zero_index);

    static ImpulseResponse delta() { return {{1.0}, 0}; }
    // Unit-area Gaussian sampled on the bin grid, truncated at +-truncate_sigmas.
    static ImpulseResponse gaussian(double fwhm_bins, double truncate_sigmas = 4.0);

    std::span<const double> kernel() const { return kernel_; }
    int zero_index() const { return zero_index_; }
    int size() const { return int(kernel_.size()); }
    double sum() const;

    bool operator==(const ImpulseResponse &) const = default;

  private:
    std::vector<double> kernel_;
    int zero_index_;
};

struct LidarNoiseParams {
    double n_pulses = 1.0;     // N
    double efficiency = 1.0;   // eta
    double ambient_rate = 0;   // A, photons per pulse
    double dark_rate = 0;      // D, counts per pulse
    double background_per_bin = 0;  // B

    // B = N (eta A + D), read as a per-bin level.
    static LidarNoiseParams from_rates(double n_pulses, double efficiency, double ambient_rate,
                                       double dark_rate);
    void validate() const;
    double signal_gain() const { return n_pulses * efficiency; }
};

// out[n] = sum_m f[m] in[n - (m - zero_index)], zero padded, per channel.
void convolve_bins(std::span<const double> in, const ImpulseResponse &f, int n_bins, int channels,
                   std::span<double> out);
// Adjoint of convolve_bins (correlation with the kernel).
void correlate_bins(std::span<const double> adj_out, const ImpulseResponse &f, int n_bins,
                    int channels, std::span<double> adj_in);

TransientImage convolve_time(const TransientImage &transient, const ImpulseResponse &f);

}  // namespace tnrf
