// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/core.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tnrf {

TimeAxis::TimeAxis(int n_bins, double bin_width, double t_offset)
    : n_bins_(n_bins), bin_width_(bin_width), t_offset_(t_offset) {
    if (n_bins < 1)
        throw std::invalid_argument("TimeAxis: n_bins must be >= 1");
    if (!(bin_width > 0) || !std::isfinite(bin_width))
        throw std::invalid_argument("TimeAxis: bin_width must be positive");
    if (!std::isfinite(t_offset))
        throw std::invalid_argument("TimeAxis: t_offset must be finite");
}

std::int64_t TimeAxis::bin_of_distance(double distance) const {
    return std::int64_t(std::floor(fractional_bin_of_distance(distance)));
}

double fractional_bin(const TimeAxis &axis, double round_trip_time) {
    return axis.fractional_bin(round_trip_time);
}

SplatWeights splat_weights(double fractional_bin) {
    double lo = std::floor(fractional_bin);
    double frac = fractional_bin - lo;
    return {std::int64_t(lo), 1.0 - frac, frac};
}

std::string_view to_string(TransientKind kind) {
    switch (kind) {
    case TransientKind::Rate:
        return "rate";
    case TransientKind::Clean:
        return "clean";
    case TransientKind::NoisyCounts:
        return "noisy-counts";
    }
    return "unknown";
}

TransientImage::TransientImage(int height, int width, int n_bins, int channels,
                               TransientKind kind)
    : height_(height), width_(width), n_bins_(n_bins), channels_(channels), kind_(kind) {
    if (height < 1 || width < 1 || n_bins < 1)
        throw std::invalid_argument("TransientImage: dimensions must be positive");
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("TransientImage: channels must be 1 or 3");
    data_.assign(std::size_t(height) * width * n_bins * channels, 0.0);
}

void TransientImage::validate() const {
    for (std::size_t k = 0; k < data_.size(); ++k) {
        double v = data_[k];
        if (!(v >= 0) || !std::isfinite(v))
            throw std::domain_error("TransientImage: negative or non-finite entry at index " +
                                    std::to_string(k));
        if (kind_ == TransientKind::NoisyCounts && v != std::floor(v))
            throw std::domain_error("TransientImage: non-integer count at index " +
                                    std::to_string(k));
    }
}

ImpulseResponse::ImpulseResponse(std::vector<double> kernel, int zero_index)
    : kernel_(std::move(kernel)), zero_index_(zero_index) {
    if (kernel_.empty())
        throw std::invalid_argument("ImpulseResponse: empty kernel");
    bool any_positive = false;
    for (double v : kernel_) {
        if (!(v >= 0) || !std::isfinite(v))
            throw std::invalid_argument("ImpulseResponse: kernel entries must be >= 0");
        any_positive |= v > 0;
    }
    if (!any_positive)
        throw std::invalid_argument("ImpulseResponse: kernel has no positive entry");
    if (zero_index < 0 || zero_index >= int(kernel_.size()))
        throw std::invalid_argument("ImpulseResponse: zero_index out of range");
}

ImpulseResponse ImpulseResponse::gaussian(double fwhm_bins, double truncate_sigmas) {
    if (!(fwhm_bins > 0))
        throw std::invalid_argument("ImpulseResponse::gaussian: fwhm must be positive");
    double sigma = fwhm_bins / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    int half = std::max(1, int(std::ceil(truncate_sigmas * sigma)));
    std::vector<double> k(2 * half + 1);
    double total = 0;
    for (int m = -half; m <= half; ++m) {
        double v = std::exp(-0.5 * (m / sigma) * (m / sigma));
        k[m + half] = v;
        total += v;
    }
    for (double &v : k)
        v /= total;
    return {std::move(k), half};
}

double ImpulseResponse::sum() const {
    double s = 0;
    for (double v : kernel_)
        s += v;
    return s;
}

LidarNoiseParams LidarNoiseParams::from_rates(double n_pulses, double efficiency,
                                              double ambient_rate, double dark_rate) {
    LidarNoiseParams p{n_pulses, efficiency, ambient_rate, dark_rate,
                       n_pulses * (efficiency * ambient_rate + dark_rate)};
    p.validate();
    return p;
}

void LidarNoiseParams::validate() const {
    if (!(n_pulses >= 1))
        throw std::invalid_argument("LidarNoiseParams: n_pulses must be >= 1");
    if (!(efficiency > 0 && efficiency <= 1))
        throw std::invalid_argument("LidarNoiseParams: efficiency must be in (0, 1]");
    if (!(ambient_rate >= 0) || !(dark_rate >= 0) || !(background_per_bin >= 0))
        throw std::invalid_argument("LidarNoiseParams: rates must be nonnegative");
}

namespace {

void check_kernel_length(const ImpulseResponse &f, int n_bins) {
    if (f.size() > 2 * n_bins)
        throw std::invalid_argument("convolve: kernel longer than twice the bin count");
}

}  // namespace

void convolve_bins(std::span<const double> in, const ImpulseResponse &f, int n_bins, int channels,
                   std::span<double> out) {
    check_kernel_length(f, n_bins);
    auto k = f.kernel();
    const int z = f.zero_index();
    std::fill(out.begin(), out.begin() + std::size_t(n_bins) * channels, 0.0);
    // Scatter form: every input bin spreads over the kernel support.
    for (int src = 0; src < n_bins; ++src) {
        const double *v = &in[std::size_t(src) * channels];
        bool nonzero = false;
        for (int c = 0; c < channels; ++c)
            nonzero |= v[c] != 0;
        if (!nonzero)
            continue;
        int m_lo = std::max(0, z - src);
        int m_hi = std::min(int(k.size()), n_bins - src + z);
        for (int m = m_lo; m < m_hi; ++m) {
            double *o = &out[std::size_t(src + m - z) * channels];
            for (int c = 0; c < channels; ++c)
                o[c] += k[m] * v[c];
        }
    }
}

void correlate_bins(std::span<const double> adj_out, const ImpulseResponse &f, int n_bins,
                    int channels, std::span<double> adj_in) {
    check_kernel_length(f, n_bins);
    auto k = f.kernel();
    const int z = f.zero_index();
    for (int src = 0; src < n_bins; ++src) {
        double *a = &adj_in[std::size_t(src) * channels];
        for (int c = 0; c < channels; ++c)
            a[c] = 0;
        int m_lo = std::max(0, z - src);
        int m_hi = std::min(int(k.size()), n_bins - src + z);
        for (int m = m_lo; m < m_hi; ++m) {
            const double *o = &adj_out[std::size_t(src + m - z) * channels];
            for (int c = 0; c < channels; ++c)
                a[c] += k[m] * o[c];
        }
    }
}

TransientImage convolve_time(const TransientImage &transient, const ImpulseResponse &f) {
    if (transient.kind() == TransientKind::NoisyCounts)
        throw std::invalid_argument("convolve_time: input must be a rate or clean transient");
    check_kernel_length(f, transient.n_bins());
    TransientImage out(transient.height(), transient.width(), transient.n_bins(),
                       transient.channels(), transient.kind());
    for (int i = 0; i < transient.height(); ++i)
        for (int j = 0; j < transient.width(); ++j)
            convolve_bins(transient.pixel(i, j), f, transient.n_bins(), transient.channels(),
                          out.pixel(i, j));
    return out;
}

}  // namespace tnrf
