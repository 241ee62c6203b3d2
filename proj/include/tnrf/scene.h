// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <tnrf/camera.h>
#include <tnrf/geometry.h>

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace tnrf {

using Albedo = std::array<double, 3>;

struct Sphere {
    Vec3 center;
    double radius;
};

struct PlaneExtent {
    Vec3 u_axis;  // unit, perpendicular to the normal; v = normal x u
    double half_u, half_v;
};

struct Plane {
    Vec3 point;
    Vec3 normal;
    std::optional<PlaneExtent> extent;
};

struct Box {
    Vec3 min, max;
};

struct Primitive {
    std::variant<Sphere, Plane, Box> shape;
    Albedo albedo{1, 1, 1};
};

struct SurfaceHit {
    double distance;
    Vec3 normal;
    Albedo albedo;
};

struct Bounds3 {
    Vec3 min{-0.5, -0.5, -0.5}, max{0.5, 0.5, 0.5};

    Vec3 diagonal() const { return max - min; }
    Vec3 center() const { return (min + max) * 0.5; }
    bool contains(const Vec3 &p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
    // Parametric overlap of the ray with the box, or nullopt.
    std::optional<std::pair<double, double>> intersect(const Ray &ray) const;

    bool operator==(const Bounds3 &) const = default;
};

// Analytic scene with a reconstruction volume that encloses every surface
// the lidar should see.
struct AnalyticScene {
    std::string name = "scene";
    std::vector<Primitive> primitives;
    Bounds3 bounds;

    void validate() const;
};

// Nearest hit at positive distance; ties go to the earlier primitive.
std::optional<SurfaceHit> intersect(const AnalyticScene &scene, const Ray &ray);

AnalyticScene scene_from_json(const nlohmann::json &j);
nlohmann::json scene_to_json(const AnalyticScene &scene);
AnalyticScene load_scene(const std::string &path_or_builtin);

// Built-in scenes, addressable as "builtin:<name>".
AnalyticScene sphere_on_plane_scene();
AnalyticScene two_plane_scene();

}  // namespace tnrf
