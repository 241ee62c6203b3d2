// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/scene.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace tnrf {

namespace {

constexpr double kHitEpsilon = 1e-9;

std::optional<double> hit_sphere(const Sphere &s, const Ray &ray, Vec3 *normal) {
    Vec3 oc = ray.origin - s.center;
    double b = dot(oc, ray.direction);
    double c = dot(oc, oc) - s.radius * s.radius;
    double disc = b * b - c;
    if (disc < 0)
        return std::nullopt;
    double sq = std::sqrt(disc);
    double t = -b - sq;
    if (t <= kHitEpsilon)
        t = -b + sq;
    if (t <= kHitEpsilon)
        return std::nullopt;
    *normal = normalize(ray.at(t) - s.center);
    return t;
}

std::optional<double> hit_plane(const Plane &p, const Ray &ray, Vec3 *normal) {
    double denom = dot(ray.direction, p.normal);
    if (std::abs(denom) < 1e-12)
        return std::nullopt;
    double t = dot(p.point - ray.origin, p.normal) / denom;
    if (t <= kHitEpsilon)
        return std::nullopt;
    if (p.extent) {
        Vec3 rel = ray.at(t) - p.point;
        Vec3 v_axis = cross(p.normal, p.extent->u_axis);
        if (std::abs(dot(rel, p.extent->u_axis)) > p.extent->half_u ||
            std::abs(dot(rel, v_axis)) > p.extent->half_v)
            return std::nullopt;
    }
    *normal = p.normal;
    return t;
}

std::optional<double> hit_box(const Box &b, const Ray &ray, Vec3 *normal) {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    int axis0 = -1, axis1 = -1;
    for (int a = 0; a < 3; ++a) {
        double o = ray.origin[a], d = ray.direction[a];
        if (std::abs(d) < 1e-300) {
            if (o < b.min[a] || o > b.max[a])
                return std::nullopt;
            continue;
        }
        double ta = (b.min[a] - o) / d, tb = (b.max[a] - o) / d;
        if (ta > tb)
            std::swap(ta, tb);
        if (ta > t0) {
            t0 = ta;
            axis0 = a;
        }
        if (tb < t1) {
            t1 = tb;
            axis1 = a;
        }
        if (t0 > t1)
            return std::nullopt;
    }
    double t = t0;
    int axis = axis0;
    if (t <= kHitEpsilon) {
        t = t1;
        axis = axis1;
    }
    if (t <= kHitEpsilon || axis < 0)
        return std::nullopt;
    Vec3 n;
    n[axis] = ray.direction[axis] > 0 ? -1.0 : 1.0;
    if (t == t1 && t0 <= kHitEpsilon)
        n[axis] = -n[axis];
    *normal = n;
    return t;
}

Vec3 vec_from_json(const nlohmann::json &j) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("scene: expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec_to_json(const Vec3 &v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Albedo albedo_from_json(const nlohmann::json &j) {
    if (j.is_number()) {
        double a = j.get<double>();
        return {a, a, a};
    }
    Vec3 v = vec_from_json(j);
    return {v.x, v.y, v.z};
}

}  // namespace

std::optional<std::pair<double, double>> Bounds3::intersect(const Ray &ray) const {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        double o = ray.origin[a], d = ray.direction[a];
        if (d == 0) {
            if (o < min[a] || o > max[a])
                return std::nullopt;
            continue;
        }
        double ta = (min[a] - o) / d, tb = (max[a] - o) / d;
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 > t1 || t1 <= 0)
        return std::nullopt;
    return std::make_pair(std::max(t0, 0.0), t1);
}

void AnalyticScene::validate() const {
    for (int a = 0; a < 3; ++a)
        if (!(bounds.min[a] < bounds.max[a]))
            throw std::invalid_argument("scene: bounds min must be < max");
    for (const auto &p : primitives) {
        for (double a : p.albedo)
            if (!(a >= 0) || !std::isfinite(a))
                throw std::invalid_argument("scene: albedo must be finite and >= 0");
        if (auto *s = std::get_if<Sphere>(&p.shape); s && !(s->radius > 0))
            throw std::invalid_argument("scene: sphere radius must be > 0");
        if (auto *pl = std::get_if<Plane>(&p.shape)) {
            if (std::abs(length(pl->normal) - 1) > 1e-9)
                throw std::invalid_argument("scene: plane normal must be unit length");
            if (pl->extent && (std::abs(length(pl->extent->u_axis) - 1) > 1e-9 ||
                               std::abs(dot(pl->extent->u_axis, pl->normal)) > 1e-9))
                throw std::invalid_argument("scene: plane u_axis must be unit and in-plane");
        }
        if (auto *b = std::get_if<Box>(&p.shape))
            for (int a = 0; a < 3; ++a)
                if (!(b->min[a] < b->max[a]))
                    throw std::invalid_argument("scene: box min must be < max");
    }
}

std::optional<SurfaceHit> intersect(const AnalyticScene &scene, const Ray &ray) {
    std::optional<SurfaceHit> best;
    for (const auto &prim : scene.primitives) {
        Vec3 normal;
        std::optional<double> t = std::visit(
            [&](const auto &shape) -> std::optional<double> {
                using T = std::decay_t<decltype(shape)>;
                if constexpr (std::is_same_v<T, Sphere>)
                    return hit_sphere(shape, ray, &normal);
                else if constexpr (std::is_same_v<T, Plane>)
                    return hit_plane(shape, ray, &normal);
                else
                    return hit_box(shape, ray, &normal);
            },
            prim.shape);
        if (t && (!best || *t < best->distance))
            best = SurfaceHit{*t, normal, prim.albedo};
    }
    return best;
}

AnalyticScene scene_from_json(const nlohmann::json &j) {
    AnalyticScene scene;
    scene.name = j.value("name", std::string("scene"));
    if (j.contains("bounds")) {
        scene.bounds.min = vec_from_json(j.at("bounds").at("min"));
        scene.bounds.max = vec_from_json(j.at("bounds").at("max"));
    }
    for (const auto &pj : j.at("primitives")) {
        Primitive p;
        std::string type = pj.at("type").get<std::string>();
        if (type == "sphere") {
            p.shape = Sphere{vec_from_json(pj.at("center")), pj.at("radius").get<double>()};
        } else if (type == "plane") {
            Plane pl{vec_from_json(pj.at("point")), normalize(vec_from_json(pj.at("normal"))), {}};
            if (pj.contains("extent")) {
                const auto &e = pj.at("extent");
                pl.extent = PlaneExtent{normalize(vec_from_json(e.at("u_axis"))),
                                        e.at("half_u").get<double>(), e.at("half_v").get<double>()};
            }
            p.shape = pl;
        } else if (type == "box") {
            p.shape = Box{vec_from_json(pj.at("min")), vec_from_json(pj.at("max"))};
        } else {
            throw std::invalid_argument("scene: unknown primitive type '" + type + "'");
        }
        if (pj.contains("albedo"))
            p.albedo = albedo_from_json(pj.at("albedo"));
        scene.primitives.push_back(p);
    }
    scene.validate();
    return scene;
}

nlohmann::json scene_to_json(const AnalyticScene &scene) {
    nlohmann::json j;
    j["name"] = scene.name;
    j["bounds"] = {{"min", vec_to_json(scene.bounds.min)}, {"max", vec_to_json(scene.bounds.max)}};
    auto prims = nlohmann::json::array();
    for (const auto &p : scene.primitives) {
        nlohmann::json pj;
        std::visit(
            [&](const auto &s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Sphere>) {
                    pj["type"] = "sphere";
                    pj["center"] = vec_to_json(s.center);
                    pj["radius"] = s.radius;
                } else if constexpr (std::is_same_v<T, Plane>) {
                    pj["type"] = "plane";
                    pj["point"] = vec_to_json(s.point);
                    pj["normal"] = vec_to_json(s.normal);
                    if (s.extent)
                        pj["extent"] = {{"u_axis", vec_to_json(s.extent->u_axis)},
                                        {"half_u", s.extent->half_u},
                                        {"half_v", s.extent->half_v}};
                } else {
                    pj["type"] = "box";
                    pj["min"] = vec_to_json(s.min);
                    pj["max"] = vec_to_json(s.max);
                }
            },
            p.shape);
        pj["albedo"] = {p.albedo[0], p.albedo[1], p.albedo[2]};
        prims.push_back(pj);
    }
    j["primitives"] = prims;
    return j;
}

AnalyticScene sphere_on_plane_scene() {
    // Reconstruction volume is a cube with unit diagonal.
    const double h = 0.5 / std::sqrt(3.0);
    AnalyticScene s;
    s.name = "sphere_on_plane";
    s.bounds = {{-h, -h, -h}, {h, h, h}};
    const double floor_z = -0.22, radius = 0.16;
    s.primitives.push_back(
        {Plane{{0, 0, floor_z}, {0, 0, 1}, PlaneExtent{{1, 0, 0}, 0.27, 0.27}}, {0.5, 0.5, 0.5}});
    s.primitives.push_back({Sphere{{0.0, 0.0, floor_z + radius}, radius}, {0.9, 0.9, 0.9}});
    return s;
}

AnalyticScene two_plane_scene() {
    AnalyticScene s;
    s.name = "two_plane";
    s.bounds = {{-0.5, -0.5, 0.8}, {0.5, 0.5, 1.5}};
    s.primitives.push_back(
        {Plane{{-0.25, 0, 1.0}, {0, 0, -1}, PlaneExtent{{1, 0, 0}, 0.25, 0.5}}, {0.8, 0.8, 0.8}});
    s.primitives.push_back(
        {Plane{{0, 0, 1.3}, {0, 0, -1}, PlaneExtent{{1, 0, 0}, 0.5, 0.5}}, {0.5, 0.5, 0.5}});
    return s;
}

AnalyticScene load_scene(const std::string &path_or_builtin) {
    const std::string prefix = "builtin:";
    if (path_or_builtin.rfind(prefix, 0) == 0) {
        std::string name = path_or_builtin.substr(prefix.size());
        if (name == "sphere_on_plane")
            return sphere_on_plane_scene();
        if (name == "two_plane")
            return two_plane_scene();
        throw std::invalid_argument("unknown builtin scene '" + name + "'");
    }
    std::ifstream in(path_or_builtin);
    if (!in)
        throw std::runtime_error("cannot open scene file " + path_or_builtin);
    return scene_from_json(nlohmann::json::parse(in));
}

}  // namespace tnrf
