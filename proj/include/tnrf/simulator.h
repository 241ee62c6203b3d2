// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

// Forward model of a coaxial single-photon lidar over analytic scenes:
// per-pixel arrival-rate transients and Poisson photon counts.

#pragma once

#include <tnrf/camera.h>
#include <tnrf/core.h>
#include <tnrf/scene.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tnrf {

struct SimConfig {
    TimeAxis time_axis{1500, 8e-12, 0.0};
    ImpulseResponse impulse = ImpulseResponse::delta();
    LidarNoiseParams noise;
    double footprint_sigma = 0.15;  // pixels
    int footprint_samples = 16;
    std::uint64_t rng_seed = 0;
    double flux_scale = 1.0;
    int channels = 1;

    void validate() const;
};

struct SimStats {
    std::int64_t hits = 0;
    std::int64_t clipped_hits = 0;  // returns entirely outside the time axis
};

// Arrival-rate transient for one pixel, n_bins * channels values. Each
// footprint ray that hits contributes w * flux_scale * albedo * |cos| / z^2
// times the impulse response placed at round trip 2z/c.
std::vector<double> rate_transient(const AnalyticScene &scene, const CameraModel &camera,
                                   double px, double py, const SimConfig &config,
                                   SimStats *stats = nullptr);

// Full-frame rate transient (kind = Rate). Pixel (i, j) is centered at (j + 0.5, i + 0.5).
TransientImage render_rate_image(const AnalyticScene &scene, const CameraModel &camera,
                                 const SimConfig &config, SimStats *stats = nullptr);

// Entries ~ Poisson(N eta rate + B), independent, one substream per pixel.
TransientImage sample_counts(const TransientImage &rate, const LidarNoiseParams &noise,
                             std::uint64_t rng_seed);

// K poses on a circle around `target` (z up), equal azimuth steps starting at
// `azimuth0_deg`, looking at the target.
std::vector<RigidTransform> circular_poses(int k, double radius, double elevation_deg,
                                           double azimuth0_deg = 0.0, Vec3 target = {});

struct DatasetView {
    int index;
    bool train;
    RigidTransform pose;
};

// Everything in meta.json.
struct DatasetMeta {
    static constexpr int kFormatVersion = 1;

    std::string scene_name;
    Bounds3 bounds;
    int height = 0, width = 0;
    PinholeIntrinsics intrinsics{};
    std::vector<DatasetView> views;
    TimeAxis time_axis{1, 1.0};
    ImpulseResponse impulse = ImpulseResponse::delta();
    LidarNoiseParams noise;
    double flux_scale = 1.0;
    double footprint_sigma = 0;
    int footprint_samples = 1;
    int channels = 1;
    std::uint64_t seed = 0;
    double max_count = 0;

    CameraModel camera(const RigidTransform &pose) const;
};

struct ViewSpec {
    RigidTransform pose;
    bool train = true;
};

struct DatasetRequest {
    AnalyticScene scene;
    CameraModel camera = CameraModel::pinhole(1, 1, {1, 1, 0.5, 0.5}, {});  // pose replaced per view
    std::vector<ViewSpec> views;
    SimConfig config;
    double counts_target = 2850;  // mean counts per occupied pixel; <= 0 keeps flux_scale
};

struct Dataset {
    DatasetMeta meta;
    std::vector<TransientImage> clean;  // expected signal counts N eta lambda (kind = Clean)
    std::vector<TransientImage> noisy;  // kind = NoisyCounts
    SimStats stats;
};

// Simulates every view. With counts_target > 0, a pre-pass at flux_scale = 1
// sets flux_scale so the mean expected count over occupied pixels (signal
// plus background) hits the target.
Dataset simulate_dataset(const DatasetRequest &request);

// Writes meta.json and view_{k}_{clean|noisy}.trns into `dir`.
void write_dataset(const Dataset &dataset, const std::filesystem::path &dir);
Dataset generate_dataset(const DatasetRequest &request, const std::filesystem::path &dir);

DatasetMeta read_dataset_meta(const std::filesystem::path &dir);
void write_dataset_meta(const std::filesystem::path &dir, const DatasetMeta &meta);
Dataset read_dataset(const std::filesystem::path &dir);
std::filesystem::path view_path(const std::filesystem::path &dir, int index, bool noisy);

// Mean per-pixel total count over occupied pixels (those with nonzero clean signal).
double occupied_pixel_mean(const TransientImage &counts, const TransientImage &clean);

}  // namespace tnrf
