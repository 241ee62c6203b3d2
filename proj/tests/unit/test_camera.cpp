// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/camera.h>
#include <tnrf/random.h>

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace tnrf;

TEST(Camera, PinholeExamples) {
    auto cam = CameraModel::pinhole(512, 512, {256, 256, 256, 256}, {});
    Ray r = cam.ray_for_pixel(256, 256);
    EXPECT_NEAR(length(r.direction - Vec3{0, 0, 1}), 0, 1e-15);
    r = cam.ray_for_pixel(512, 256);
    EXPECT_NEAR(length(r.direction - normalize(Vec3{1, 0, 1})), 0, 1e-15);
    RigidTransform moved;
    moved.translation = {0, 0, -3};
    r = ray_for_pixel(cam.with_pose(moved), 256, 256);
    EXPECT_EQ(r.origin, (Vec3{0, 0, -3}));
    EXPECT_NEAR(length(r.direction - Vec3{0, 0, 1}), 0, 1e-15);
    EXPECT_DOUBLE_EQ(r.px, 256);
}

TEST(Camera, PinholeValidation) {
    EXPECT_THROW(CameraModel::pinhole(4, 4, {0, 1, 2, 2}, {}), std::invalid_argument);
    RigidTransform bad;
    bad.rotation(1, 1) = 2;
    EXPECT_THROW(CameraModel::pinhole(4, 4, {1, 1, 2, 2}, bad), std::invalid_argument);
}

TEST(Camera, UnitDirections) {
    auto pose = RigidTransform::look_at({1, 2, 3}, {0, 0, 0}, {0, 0, 1});
    auto cam = CameraModel::pinhole(48, 64, {50, 55, 31.5, 23.5}, pose);
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
        Ray r = cam.ray_for_pixel(rng.uniform() * 64, rng.uniform() * 48);
        EXPECT_NEAR(length(r.direction), 1.0, 1e-9);
    }
}

namespace {

RayTable table_from_pinhole(const CameraModel &cam) {
    RayTable t;
    for (int i = 0; i < cam.height(); ++i)
        for (int j = 0; j < cam.width(); ++j) {
            // Stored in camera coordinates: identity pose.
            Ray r = cam.ray_for_pixel(j + 0.5, i + 0.5);
            t.entries.insert(t.entries.end(), {r.origin.x, r.origin.y, r.origin.z, r.direction.x,
                                               r.direction.y, r.direction.z});
        }
    return t;
}

}  // namespace

TEST(Camera, RayTableLookupAndBounds) {
    auto pin = CameraModel::pinhole(8, 10, {20, 20, 5, 4}, {});
    auto table = CameraModel::ray_table(8, 10, table_from_pinhole(pin), {});
    // Pixel centers reproduce the stored rays.
    Ray a = table.ray_for_pixel(3.5, 2.5), b = pin.ray_for_pixel(3.5, 2.5);
    EXPECT_NEAR(length(a.direction - b.direction), 0, 1e-12);
    // Fractional lookups are unit length and close to the pinhole ray.
    Ray c = table.ray_for_pixel(3.9, 2.2), d = pin.ray_for_pixel(3.9, 2.2);
    EXPECT_NEAR(length(c.direction), 1.0, 1e-12);
    EXPECT_NEAR(length(c.direction - d.direction), 0, 1e-3);
    // Footprint margin is accepted, beyond it is rejected.
    EXPECT_NO_THROW(table.ray_for_pixel(-0.5, 8.5));
    EXPECT_THROW(table.ray_for_pixel(-1.5, 2), std::out_of_range);
    EXPECT_THROW(table.ray_for_pixel(3, 9.5), std::out_of_range);
}

TEST(Camera, RayTableRejectsNonUnitDirections) {
    RayTable t;
    t.entries = {0, 0, 0, 0, 0, 2};
    EXPECT_THROW(CameraModel::ray_table(1, 1, t, {}), std::invalid_argument);
    t.entries = {0, 0, 0};
    EXPECT_THROW(CameraModel::ray_table(1, 1, t, {}), std::invalid_argument);
}

TEST(Footprint, Degenerate) {
    auto s = footprint_samples(3.5, 7.5, 0.0, 16, 9);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].px, 3.5);
    EXPECT_EQ(s[0].py, 7.5);
    EXPECT_EQ(s[0].weight, 1.0);
}

TEST(Footprint, TruncatedGaussian) {
    auto s = footprint_samples(10.5, 20.5, 0.15, 16, 42);
    ASSERT_EQ(s.size(), 16u);
    double total = 0;
    for (const auto &f : s) {
        EXPECT_LE(std::abs(f.px - 10.5), 0.6 + 1e-12);
        EXPECT_LE(std::abs(f.py - 20.5), 0.6 + 1e-12);
        total += f.weight;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    // Weights follow the Gaussian density of the offsets.
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = 0; b < s.size(); ++b) {
            auto r2 = [](const FootprintSample &f) {
                return (f.px - 10.5) * (f.px - 10.5) + (f.py - 20.5) * (f.py - 20.5);
            };
            double ratio = s[a].weight / s[b].weight;
            double want = std::exp(-(r2(s[a]) - r2(s[b])) / (2 * 0.15 * 0.15));
            EXPECT_NEAR(ratio / want, 1.0, 1e-9);
        }
}

TEST(Footprint, MirroredPairsHaveEqualWeights) {
    for (int n : {2, 7, 16}) {
        auto s = footprint_samples(0.5, 0.5, 0.3, n, 3);
        int matched = 0;
        for (std::size_t a = 0; a < s.size(); ++a)
            for (std::size_t b = a + 1; b < s.size(); ++b) {
                if (std::abs(s[a].px - 0.5 + s[b].px - 0.5) < 1e-12 &&
                    std::abs(s[a].py - 0.5 + s[b].py - 0.5) < 1e-12) {
                    EXPECT_NEAR(s[a].weight / s[b].weight, 1.0, 1e-12);
                    ++matched;
                }
            }
        EXPECT_EQ(matched, n / 2);
    }
}

TEST(Footprint, NormalizedAndDeterministic) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        double sigma = rng.uniform() * 2;
        int n = 1 + int(rng.uniform_int(40));
        auto s = footprint_samples(rng.uniform() * 100, rng.uniform() * 100, sigma, n, trial);
        double total = 0;
        for (const auto &f : s)
            total += f.weight;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
    auto a = footprint_samples(4.5, 5.5, 0.15, 16, 7);
    auto b = footprint_samples(4.5, 5.5, 0.15, 16, 7);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].px, b[k].px);
        EXPECT_EQ(a[k].weight, b[k].weight);
    }
    auto c = footprint_samples(4.5, 5.5, 0.15, 16, 8);
    EXPECT_NE(a[0].px, c[0].px);
}

TEST(Footprint, RejectsInvalid) {
    EXPECT_THROW(footprint_samples(0, 0, -0.1, 4, 0), std::invalid_argument);
    EXPECT_THROW(footprint_samples(0, 0, 0.1, 0, 0), std::invalid_argument);
}
