// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <tnrf/core.h>
#include <tnrf/formats.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tnrf {

inline constexpr double kDisplayGamma = 1.0 / 2.2;
inline constexpr double kLogFloor = 1e-12;

struct PsnrResult {
    double db = 0;
    bool infinite = false;  // identical images after preprocessing
};

// Both images are divided by `peak`, clipped to [0, 1] and raised to 1/2.2
// before 10 log10(1 / MSE).
PsnrResult intensity_psnr(const Image &rendered, const Image &reference, double peak);

struct DepthL1 {
    double mean = 0;
    std::int64_t valid = 0;
    std::int64_t invalid = 0;  // sentinel in either map
};

// Mean |a - b| over pixels valid in both maps; throws if none are.
DepthL1 depth_l1(const Image &rendered, const Image &reference);

// Depth (one-way meters) of the bin maximizing the correlation of the
// histogram with ln(f + 1e-12). Kernel entries falling outside the time axis
// contribute nothing. kInvalidDepth for an all-zero histogram.
double lmf_depth(std::span<const double> histogram, const ImpulseResponse &impulse,
                 const TimeAxis &axis);
// Per-pixel estimate on the channel-summed histogram.
Image lmf_depth_image(const TransientImage &transient, const ImpulseResponse &impulse,
                      const TimeAxis &axis);

struct ViewMetrics {
    int view = 0;
    PsnrResult psnr;
    DepthL1 depth;
    std::int64_t pixels = 0;
};

struct MetricsReport {
    std::vector<ViewMetrics> views;
    PsnrResult mean_psnr;  // infinite if any view is
    double mean_depth_l1 = 0;
    std::string config;  // free-form JSON text echoed into the report

    void finalize();  // recomputes the means from `views`
    std::string to_json() const;
};

// Metrics for one view: intensity is the bin sum of the transient, peak is
// the maximum reference intensity.
ViewMetrics evaluate_view(int view, const TransientImage &pred, const Image &pred_depth,
                          const TransientImage &ref, const Image &ref_depth);

// Compares every view present in both directories. Reference depths come
// from lmf_depth on the reference transients; predicted depths are read from
// view_<k>_depth.timg when present and estimated the same way otherwise.
MetricsReport evaluate_directories(const std::filesystem::path &pred,
                                   const std::filesystem::path &ref);

struct HistogramStats {
    int view = 0;
    double total_counts = 0;
    double occupied_pixel_mean = 0;
    std::int64_t occupied_pixels = 0;
    double background_estimate = 0;
};

// Occupied pixels are those with nonzero clean signal when `clean` is given,
// otherwise those whose total is well above the background level.
HistogramStats histogram_stats(const TransientImage &counts, const TransientImage *clean,
                               const ImpulseResponse &impulse);

std::filesystem::path depth_path(const std::filesystem::path &dir, int index);
std::filesystem::path intensity_path(const std::filesystem::path &dir, int index);

}  // namespace tnrf
