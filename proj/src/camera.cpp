// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/camera.h>
#include <tnrf/random.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tnrf {

CameraModel::CameraModel(int h, int w, std::variant<PinholeIntrinsics, RayTable> m,
                         RigidTransform pose)
    : height_(h), width_(w), model_(std::move(m)), pose_(pose) {
    if (h < 1 || w < 1)
        throw std::invalid_argument("CameraModel: image size must be positive");
    if (!pose_.is_valid())
        throw std::invalid_argument("CameraModel: pose is not a rigid transform");
}

CameraModel CameraModel::pinhole(int height, int width, PinholeIntrinsics k,
                                 RigidTransform pose) {
    if (!(k.fx > 0) || !(k.fy > 0))
        throw std::invalid_argument("CameraModel: focal lengths must be positive");
    return {height, width, k, pose};
}

CameraModel CameraModel::ray_table(int height, int width, RayTable table, RigidTransform pose) {
    if (table.entries.size() != std::size_t(height) * width * 6)
        throw std::invalid_argument("CameraModel: ray table must hold H*W*6 values");
    for (std::size_t k = 0; k < table.entries.size(); k += 6) {
        Vec3 d{table.entries[k + 3], table.entries[k + 4], table.entries[k + 5]};
        if (std::abs(length(d) - 1.0) > 1e-6)
            throw std::invalid_argument("CameraModel: ray table direction not unit length");
    }
    return {height, width, std::move(table), pose};
}

CameraModel CameraModel::with_pose(const RigidTransform &pose) const {
    return {height_, width_, model_, pose};
}

Ray CameraModel::ray_for_pixel(double px, double py) const {
    Vec3 origin, dir;
    if (auto *k = std::get_if<PinholeIntrinsics>(&model_)) {
        dir = normalize(Vec3{(px - k->cx) / k->fx, (py - k->cy) / k->fy, 1.0});
    } else {
        const auto &e = std::get<RayTable>(model_).entries;
        if (!(px >= -1 && px <= width_ + 1 && py >= -1 && py <= height_ + 1))
            throw std::out_of_range("ray_for_pixel: (" + std::to_string(px) + ", " +
                                    std::to_string(py) + ") outside the ray table");
        double gx = std::clamp(px - 0.5, 0.0, double(width_ - 1));
        double gy = std::clamp(py - 0.5, 0.0, double(height_ - 1));
        int j0 = std::min(int(gx), std::max(0, width_ - 2));
        int i0 = std::min(int(gy), std::max(0, height_ - 2));
        int j1 = std::min(j0 + 1, width_ - 1), i1 = std::min(i0 + 1, height_ - 1);
        double fx = gx - j0, fy = gy - i0;
        auto fetch = [&](int i, int j, int off) {
            std::size_t b = (std::size_t(i) * width_ + j) * 6 + off;
            return Vec3{e[b], e[b + 1], e[b + 2]};
        };
        auto lerp2 = [&](int off) {
            return fetch(i0, j0, off) * ((1 - fx) * (1 - fy)) + fetch(i0, j1, off) * (fx * (1 - fy)) +
                   fetch(i1, j0, off) * ((1 - fx) * fy) + fetch(i1, j1, off) * (fx * fy);
        };
        origin = lerp2(0);
        dir = normalize(lerp2(3));
    }
    return {pose_.apply_point(origin), normalize(pose_.apply_vector(dir)), px, py};
}

Ray ray_for_pixel(const CameraModel &camera, double px, double py) {
    return camera.ray_for_pixel(px, py);
}

std::vector<FootprintSample> footprint_samples(double px, double py, double sigma_fp,
                                               int n_samples, std::uint64_t seed) {
    if (!(sigma_fp >= 0))
        throw std::invalid_argument("footprint_samples: sigma must be >= 0");
    if (n_samples < 1)
        throw std::invalid_argument("footprint_samples: need at least one sample");
    if (sigma_fp == 0)
        return {{px, py, 1.0}};

    std::vector<FootprintSample> out;
    out.reserve(n_samples);
    if (n_samples % 2 == 1)
        out.push_back({px, py, 1.0});

    // Per-pixel Cranley-Patterson rotation of the R2 sequence.
    std::uint64_t h = hash_combine(seed, std::bit_cast<std::uint64_t>(px));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(py));
    double shift_u = to_unit_double(splitmix64(h));
    double shift_v = to_unit_double(splitmix64(h ^ 0x9e3779b97f4a7c15ULL));
    constexpr double g = 1.32471795724474602596;  // plastic number
    constexpr double a1 = 1.0 / g, a2 = 1.0 / (g * g);
    const double half_width = 4.0 * sigma_fp;
    for (int k = 0; k < n_samples / 2; ++k) {
        double u = std::fmod(shift_u + (k + 1) * a1, 1.0);
        double v = std::fmod(shift_v + (k + 1) * a2, 1.0);
        double dx = (2 * u - 1) * half_width, dy = (2 * v - 1) * half_width;
        double w = std::exp(-(dx * dx + dy * dy) / (2 * sigma_fp * sigma_fp));
        out.push_back({px + dx, py + dy, w});
        out.push_back({px - dx, py - dy, w});
    }
    double total = 0;
    for (const auto &s : out)
        total += s.weight;
    for (auto &s : out)
        s.weight /= total;
    return out;
}

}  // namespace tnrf
