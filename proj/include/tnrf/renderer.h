// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

// Time-resolved volume rendering of a VoxelField.
//
// A ray is marched with uniform steps; sample k has one-way distance d_k,
// step delta_k, alpha_k = 1 - exp(-sigma_k delta_k) and one-way
// transmittance T_k = exp(-sum_{j<k} sigma_j delta_j). Its contribution to
// the transient is
//
//   T_k^2 alpha_k c_k / max(d_k, min_distance)^2
//
// splatted at round-trip time 2 d_k / c. Footprint rays are summed with
// their weights and the pixel transient is then convolved with the impulse
// response. Depth is the bin with the largest footprint-weighted one-way
// termination mass T_k alpha_k.

#pragma once

#include <tnrf/camera.h>
#include <tnrf/core.h>
#include <tnrf/field.h>
#include <tnrf/formats.h>

#include <cstdint>
#include <span>
#include <vector>

namespace tnrf {

struct RenderConfig {
    double step_size = 0.002;  // meters
    double t_near = 1e-3;      // meters along the ray
    double t_far = 1e3;
    double footprint_sigma = 0;  // pixels
    int footprint_samples = 1;
    double min_distance = 0.01;  // clamp for the inverse-square falloff
    std::uint64_t seed = 0;
    // Stop marching once T drops below this; 0 marches the whole segment.
    double termination_threshold = 0;

    // Also requires at least two steps per round-trip bin.
    void validate(const TimeAxis &axis) const;
};

struct RaySamples {
    Vec3 direction;
    std::vector<double> distances;
    std::vector<double> deltas;
    std::vector<double> sigma;
    std::vector<double> radiance;  // [sample][channel]
    std::vector<double> transmittance;
    std::vector<double> alpha;
    int channels = 1;

    // Retained for the adjoint pass.
    std::vector<Stencil> stencils;
    std::vector<FieldPre> pre;

    std::size_t size() const { return distances.size(); }
    void clear();
};

// Samples the ray between the bbox entry and exit (padded by one step and
// clipped to [t_near, t_far]) at uniform midpoints no further apart than
// step_size.
RaySamples march(const VoxelField &field, const Ray &ray, const RenderConfig &config,
                 const TimeAxis &axis);
void march_into(const VoxelField &field, const Ray &ray, const RenderConfig &config,
                RaySamples &out);

// Pre-convolution transient of one ray, n_bins * channels values.
std::vector<double> render_transient_ray(const RaySamples &samples, const TimeAxis &axis,
                                         double min_distance);
void accumulate_transient_ray(const RaySamples &samples, const TimeAxis &axis,
                              double min_distance, double weight, std::span<double> out);

// Forward state for one pixel, reused across calls to avoid reallocation.
struct PixelRender {
    std::vector<FootprintSample> footprint;
    std::vector<RaySamples> rays;
    std::vector<double> transient_pre;  // before convolution
    std::vector<double> transient;      // after convolution
};

void render_pixel_into(const VoxelField &field, const CameraModel &camera, double px, double py,
                       const RenderConfig &config, const TimeAxis &axis,
                       const ImpulseResponse &impulse, PixelRender &out);

// Convolved transient for a pixel, n_bins * channels values.
std::vector<double> render_pixel(const VoxelField &field, const CameraModel &camera, double px,
                                 double py, const RenderConfig &config, const TimeAxis &axis,
                                 const ImpulseResponse &impulse);

// Argmax over bins of the footprint-weighted termination histogram, returned
// as the bin-center one-way distance; kInvalidDepth when the peak mass is
// below 1e-6.
double depth_from_ray(std::span<const RaySamples> rays, std::span<const double> weights,
                      const TimeAxis &axis);
double depth_from_pixel(const PixelRender &pixel, const TimeAxis &axis);

struct RenderedView {
    TransientImage transient;  // kind = Clean
    Image intensity;
    Image depth;
};

RenderedView render_view(const VoxelField &field, const CameraModel &camera,
                         const RenderConfig &config, const TimeAxis &axis,
                         const ImpulseResponse &impulse);
std::vector<RenderedView> render_views(const VoxelField &field, const CameraModel &camera,
                                       std::span<const RigidTransform> poses,
                                       const RenderConfig &config, const TimeAxis &axis,
                                       const ImpulseResponse &impulse);

// Adjoint of one marched ray. `d_contribution` holds dLoss/d(contribution)
// per sample and channel; `d_termination` (optional, may be empty) holds
// dLoss/d(T_k alpha_k) per sample.
void backward_ray(const VoxelField &field, const RaySamples &samples,
                  std::span<const double> d_contribution, std::span<const double> d_termination,
                  double min_distance, ParamGradients &grads);

// Adjoint of render_pixel_into given dLoss/d(transient). `d_termination`
// optionally gives per-footprint-ray termination adjoints.
void render_pixel_backward(const VoxelField &field, const PixelRender &pixel,
                           std::span<const double> d_transient, const TimeAxis &axis,
                           const ImpulseResponse &impulse, const RenderConfig &config,
                           std::span<const std::vector<double>> d_termination,
                           ParamGradients &grads);

struct PixelRef {
    const CameraModel *camera;
    double px, py;
};

// Batched forward + backward: gradient of sum_p <d_transient[p], tau_f[p]>
// over the batch. Per-worker buffers reduced in worker order.
ParamGradients render_backward(const VoxelField &field, std::span<const PixelRef> batch,
                               std::span<const std::vector<double>> d_transient,
                               const RenderConfig &config, const TimeAxis &axis,
                               const ImpulseResponse &impulse);

}  // namespace tnrf
