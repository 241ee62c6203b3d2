// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <tnrf/geometry.h>

#include <cstdint>
#include <variant>
#include <vector>

namespace tnrf {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
    double px = 0, py = 0;  // fractional pixel coordinates

    Vec3 at(double t) const { return origin + direction * t; }
};

struct PinholeIntrinsics {
    double fx, fy, cx, cy;
};

// Per-pixel rays in the camera frame: [H][W][6] = origin xyz, direction xyz,
// stored at pixel centers (j + 0.5, i + 0.5).
struct RayTable {
    std::vector<double> entries;
};

// Pixel (i, j) has its center at fractional coordinates (j + 0.5, i + 0.5).
class CameraModel {
  public:
    static CameraModel pinhole(int height, int width, PinholeIntrinsics k, RigidTransform pose);
    static CameraModel ray_table(int height, int width, RayTable table, RigidTransform pose);

    int height() const { return height_; }
    int width() const { return width_; }
    const RigidTransform &pose() const { return pose_; }
    bool is_pinhole() const { return std::holds_alternative<PinholeIntrinsics>(model_); }
    const PinholeIntrinsics &intrinsics() const { return std::get<PinholeIntrinsics>(model_); }
    const RayTable &table() const { return std::get<RayTable>(model_); }

    CameraModel with_pose(const RigidTransform &pose) const;

    // World-space ray through fractional pixel coordinates (px, py). Ray
    // tables accept coordinates within one pixel of the image and interpolate
    // bilinearly between pixel centers (clamped at the border).
    Ray ray_for_pixel(double px, double py) const;

  private:
    CameraModel(int h, int w, std::variant<PinholeIntrinsics, RayTable> m, RigidTransform pose);

    int height_, width_;
    std::variant<PinholeIntrinsics, RayTable> model_;
    RigidTransform pose_;
};

Ray ray_for_pixel(const CameraModel &camera, double px, double py);

struct FootprintSample {
    double px, py;
    double weight;
};

// Deterministic truncated-Gaussian footprint around a pixel center. Offsets
// come in mirrored pairs drawn from a randomly rotated R2 low-discrepancy set
// on [-4 sigma, 4 sigma]^2; an odd count adds the center. Weights follow the
// Gaussian density and sum to one.
std::vector<FootprintSample> footprint_samples(double px, double py, double sigma_fp,
                                               int n_samples, std::uint64_t seed);

}  // namespace tnrf
