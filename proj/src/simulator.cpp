// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/simulator.h>

#include <tnrf/formats.h>
#include <tnrf/parallel.h>
#include <tnrf/random.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tnrf {

void SimConfig::validate() const {
    noise.validate();
    if (footprint_samples < 1)
        throw std::invalid_argument("SimConfig: footprint_samples must be >= 1");
    if (!(footprint_sigma >= 0))
        throw std::invalid_argument("SimConfig: footprint_sigma must be >= 0");
    if (!(flux_scale > 0) || !std::isfinite(flux_scale))
        throw std::invalid_argument("SimConfig: flux_scale must be > 0");
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("SimConfig: channels must be 1 or 3");
    if (impulse.size() > 2 * time_axis.n_bins())
        throw std::invalid_argument("SimConfig: impulse longer than twice the bin count");
}

std::vector<double> rate_transient(const AnalyticScene &scene, const CameraModel &camera,
                                   double px, double py, const SimConfig &config,
                                   SimStats *stats) {
    const int n_bins = config.time_axis.n_bins();
    const int ch = config.channels;
    std::vector<double> impulses(std::size_t(n_bins) * ch, 0.0);
    bool any = false;
    for (const auto &s : footprint_samples(px, py, config.footprint_sigma,
                                           config.footprint_samples, config.rng_seed)) {
        Ray ray = camera.ray_for_pixel(s.px, s.py);
        auto hit = intersect(scene, ray);
        if (!hit)
            continue;
        double cos_theta = std::abs(dot(hit->normal, ray.direction));
        double alpha_geom = cos_theta / (hit->distance * hit->distance);
        double x = config.time_axis.fractional_bin_of_distance(hit->distance);
        // Bins touched by the splat pair once the kernel is applied.
        auto lo = std::int64_t(std::floor(x - 0.5));
        std::int64_t first = lo - config.impulse.zero_index();
        std::int64_t last = lo + 1 + (config.impulse.size() - 1 - config.impulse.zero_index());
        if (stats)
            ++stats->hits;
        if (last < 0 || first >= n_bins) {
            if (stats)
                ++stats->clipped_hits;
            continue;
        }
        double value[3];
        for (int c = 0; c < ch; ++c)
            value[c] = s.weight * config.flux_scale * hit->albedo[c] * alpha_geom;
        splat_into(impulses, n_bins, ch, x, value);
        any = true;
    }
    if (!any)
        return impulses;
    std::vector<double> out(impulses.size());
    convolve_bins(impulses, config.impulse, n_bins, ch, out);
    return out;
}

TransientImage render_rate_image(const AnalyticScene &scene, const CameraModel &camera,
                                 const SimConfig &config, SimStats *stats) {
    config.validate();
    TransientImage img(camera.height(), camera.width(), config.time_axis.n_bins(),
                       config.channels, TransientKind::Rate);
    const std::size_t n_pixels = std::size_t(camera.height()) * camera.width();
    std::vector<SimStats> chunk_stats(chunk_count(n_pixels));
    parallel_chunks(n_pixels, [&](int chunk, std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            int i = int(p / camera.width()), j = int(p % camera.width());
            auto v = rate_transient(scene, camera, j + 0.5, i + 0.5, config, &chunk_stats[chunk]);
            std::copy(v.begin(), v.end(), img.pixel(i, j).begin());
        }
    });
    if (stats)
        for (const auto &s : chunk_stats) {
            stats->hits += s.hits;
            stats->clipped_hits += s.clipped_hits;
        }
    return img;
}

TransientImage sample_counts(const TransientImage &rate, const LidarNoiseParams &noise,
                             std::uint64_t rng_seed) {
    if (rate.kind() != TransientKind::Rate)
        throw std::invalid_argument("sample_counts: input must be a rate transient");
    noise.validate();
    const double gain = noise.signal_gain();
    for (double r : rate.data()) {
        double mean = gain * r + noise.background_per_bin;
        if (!(mean <= 1e12))
            throw std::invalid_argument("sample_counts: Poisson mean exceeds 1e12");
    }
    TransientImage out(rate.height(), rate.width(), rate.n_bins(), rate.channels(),
                       TransientKind::NoisyCounts);
    const std::size_t n_pixels = std::size_t(rate.height()) * rate.width();
    parallel_for(n_pixels, [&](std::size_t p) {
        int i = int(p / rate.width()), j = int(p % rate.width());
        Rng rng(rng_seed, p);
        auto src = rate.pixel(i, j);
        auto dst = out.pixel(i, j);
        for (std::size_t k = 0; k < src.size(); ++k)
            dst[k] = double(sample_poisson(rng, gain * src[k] + noise.background_per_bin));
    });
    return out;
}

std::vector<RigidTransform> circular_poses(int k, double radius, double elevation_deg,
                                           double azimuth0_deg, Vec3 target) {
    if (k < 1)
        throw std::invalid_argument("circular_poses: need at least one pose");
    if (!(radius > 0))
        throw std::invalid_argument("circular_poses: radius must be > 0");
    std::vector<RigidTransform> poses;
    const double el = elevation_deg * M_PI / 180.0;
    for (int v = 0; v < k; ++v) {
        double az = (azimuth0_deg + 360.0 * v / k) * M_PI / 180.0;
        Vec3 eye = target + Vec3{radius * std::cos(el) * std::cos(az),
                                 radius * std::cos(el) * std::sin(az), radius * std::sin(el)};
        poses.push_back(RigidTransform::look_at(eye, target, {0, 0, 1}));
    }
    return poses;
}

CameraModel DatasetMeta::camera(const RigidTransform &pose) const {
    return CameraModel::pinhole(height, width, intrinsics, pose);
}

double occupied_pixel_mean(const TransientImage &counts, const TransientImage &clean) {
    double total = 0;
    std::int64_t occupied = 0;
    for (int i = 0; i < counts.height(); ++i)
        for (int j = 0; j < counts.width(); ++j) {
            bool occ = false;
            for (double v : clean.pixel(i, j))
                occ |= v > 0;
            if (!occ)
                continue;
            ++occupied;
            for (double v : counts.pixel(i, j))
                total += v;
        }
    return occupied ? total / double(occupied) : 0.0;
}

Dataset simulate_dataset(const DatasetRequest &request) {
    request.scene.validate();
    SimConfig config = request.config;
    config.validate();
    if (request.views.empty())
        throw std::invalid_argument("simulate_dataset: need at least one view");

    Dataset ds;
    std::vector<TransientImage> rates;
    SimConfig prepass = config;
    if (request.counts_target > 0)
        prepass.flux_scale = 1.0;
    for (const auto &v : request.views) {
        if (!v.pose.is_valid())
            throw std::invalid_argument("simulate_dataset: invalid view pose");
        rates.push_back(render_rate_image(request.scene, request.camera.with_pose(v.pose), prepass,
                                          &ds.stats));
    }

    const int n_bins = config.time_axis.n_bins();
    if (request.counts_target > 0) {
        double signal = 0;
        std::int64_t occupied = 0;
        for (const auto &r : rates)
            for (int i = 0; i < r.height(); ++i)
                for (int j = 0; j < r.width(); ++j) {
                    double s = 0;
                    for (double v : r.pixel(i, j))
                        s += v;
                    if (s > 0) {
                        signal += config.noise.signal_gain() * s;
                        ++occupied;
                    }
                }
        if (occupied == 0)
            throw std::invalid_argument("simulate_dataset: no view sees any surface");
        double background = config.noise.background_per_bin * n_bins * config.channels;
        double target_signal = request.counts_target - background;
        if (!(target_signal > 0))
            throw std::invalid_argument("simulate_dataset: counts target below background level");
        config.flux_scale = target_signal / (signal / double(occupied));
        for (auto &r : rates)
            for (double &v : r.data())
                v *= config.flux_scale;
    }

    auto &meta = ds.meta;
    meta.scene_name = request.scene.name;
    meta.bounds = request.scene.bounds;
    meta.height = request.camera.height();
    meta.width = request.camera.width();
    if (!request.camera.is_pinhole())
        throw std::invalid_argument("simulate_dataset: datasets record pinhole cameras only");
    meta.intrinsics = request.camera.intrinsics();
    meta.time_axis = config.time_axis;
    meta.impulse = config.impulse;
    meta.noise = config.noise;
    meta.flux_scale = config.flux_scale;
    meta.footprint_sigma = config.footprint_sigma;
    meta.footprint_samples = config.footprint_samples;
    meta.channels = config.channels;
    meta.seed = config.rng_seed;

    for (std::size_t k = 0; k < rates.size(); ++k) {
        meta.views.push_back({int(k), request.views[k].train, request.views[k].pose});
        TransientImage clean = rates[k];
        for (double &v : clean.data())
            v *= config.noise.signal_gain();
        clean.set_kind(TransientKind::Clean);
        TransientImage noisy = sample_counts(rates[k], config.noise, hash_combine(config.rng_seed, k));
        if (request.views[k].train)
            for (double v : noisy.data())
                meta.max_count = std::max(meta.max_count, v);
        ds.clean.push_back(std::move(clean));
        ds.noisy.push_back(std::move(noisy));
    }
    return ds;
}

namespace {

nlohmann::json meta_to_json(const DatasetMeta &m) {
    nlohmann::json j;
    j["format_version"] = DatasetMeta::kFormatVersion;
    j["scene"] = m.scene_name;
    j["bounds"] = {{"min", {m.bounds.min.x, m.bounds.min.y, m.bounds.min.z}},
                   {"max", {m.bounds.max.x, m.bounds.max.y, m.bounds.max.z}}};
    j["camera"] = {{"model", "pinhole"},
                   {"height", m.height},
                   {"width", m.width},
                   {"fx", m.intrinsics.fx},
                   {"fy", m.intrinsics.fy},
                   {"cx", m.intrinsics.cx},
                   {"cy", m.intrinsics.cy}};
    auto views = nlohmann::json::array();
    for (const auto &v : m.views)
        views.push_back({{"index", v.index},
                         {"split", v.train ? "train" : "test"},
                         {"camera_to_world", v.pose.to_matrix4()}});
    j["views"] = views;
    j["time_axis"] = {{"n_bins", m.time_axis.n_bins()},
                      {"bin_width", m.time_axis.bin_width()},
                      {"t_offset", m.time_axis.t_offset()},
                      {"speed_of_light", kSpeedOfLight}};
    j["impulse"] = {{"kernel", std::vector<double>(m.impulse.kernel().begin(),
                                                   m.impulse.kernel().end())},
                    {"zero_index", m.impulse.zero_index()}};
    j["noise"] = {{"n_pulses", m.noise.n_pulses},
                  {"efficiency", m.noise.efficiency},
                  {"ambient_rate", m.noise.ambient_rate},
                  {"dark_rate", m.noise.dark_rate},
                  {"background_per_bin", m.noise.background_per_bin}};
    j["flux_scale"] = m.flux_scale;
    j["footprint"] = {{"sigma_px", m.footprint_sigma}, {"samples", m.footprint_samples}};
    j["channels"] = m.channels;
    j["seed"] = m.seed;
    j["max_count"] = m.max_count;
    return j;
}

DatasetMeta meta_from_json(const nlohmann::json &j) {
    DatasetMeta m;
    if (j.at("format_version").get<int>() != DatasetMeta::kFormatVersion)
        throw FormatError("meta.json: unsupported format_version");
    m.scene_name = j.at("scene").get<std::string>();
    auto b = j.at("bounds");
    auto v3 = [](const nlohmann::json &a) {
        return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
    };
    m.bounds = {v3(b.at("min")), v3(b.at("max"))};
    const auto &cam = j.at("camera");
    if (cam.at("model").get<std::string>() != "pinhole")
        throw FormatError("meta.json: only pinhole cameras are supported");
    m.height = cam.at("height").get<int>();
    m.width = cam.at("width").get<int>();
    m.intrinsics = {cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                    cam.at("cx").get<double>(), cam.at("cy").get<double>()};
    for (const auto &v : j.at("views")) {
        auto pose = RigidTransform::from_matrix4(v.at("camera_to_world").get<std::array<double, 16>>());
        if (!pose.is_valid())
            throw FormatError("meta.json: view pose is not a rigid transform");
        m.views.push_back({v.at("index").get<int>(), v.at("split").get<std::string>() == "train", pose});
    }
    const auto &ta = j.at("time_axis");
    m.time_axis = TimeAxis(ta.at("n_bins").get<int>(), ta.at("bin_width").get<double>(),
                           ta.at("t_offset").get<double>());
    m.impulse = ImpulseResponse(j.at("impulse").at("kernel").get<std::vector<double>>(),
                                j.at("impulse").at("zero_index").get<int>());
    const auto &nz = j.at("noise");
    m.noise = {nz.at("n_pulses").get<double>(), nz.at("efficiency").get<double>(),
               nz.at("ambient_rate").get<double>(), nz.at("dark_rate").get<double>(),
               nz.at("background_per_bin").get<double>()};
    m.noise.validate();
    m.flux_scale = j.at("flux_scale").get<double>();
    m.footprint_sigma = j.at("footprint").at("sigma_px").get<double>();
    m.footprint_samples = j.at("footprint").at("samples").get<int>();
    m.channels = j.at("channels").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.max_count = j.at("max_count").get<double>();
    return m;
}

}  // namespace

std::filesystem::path view_path(const std::filesystem::path &dir, int index, bool noisy) {
    return dir / ("view_" + std::to_string(index) + (noisy ? "_noisy.trns" : "_clean.trns"));
}

void write_dataset_meta(const std::filesystem::path &dir, const DatasetMeta &meta) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    std::ofstream out(dir / "meta.json");
    if (!out)
        throw std::runtime_error("cannot write " + (dir / "meta.json").string());
    out << meta_to_json(meta).dump(2) << '\n';
    if (!out)
        throw std::runtime_error("write failed for meta.json");
}

void write_dataset(const Dataset &dataset, const std::filesystem::path &dir) {
    write_dataset_meta(dir, dataset.meta);
    for (std::size_t k = 0; k < dataset.clean.size(); ++k) {
        write_transient(view_path(dir, int(k), false), dataset.clean[k]);
        write_transient(view_path(dir, int(k), true), dataset.noisy[k]);
    }
}

Dataset generate_dataset(const DatasetRequest &request, const std::filesystem::path &dir) {
    Dataset ds = simulate_dataset(request);
    write_dataset(ds, dir);
    return ds;
}

DatasetMeta read_dataset_meta(const std::filesystem::path &dir) {
    std::ifstream in(dir / "meta.json");
    if (!in)
        throw std::runtime_error("cannot open " + (dir / "meta.json").string());
    try {
        return meta_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception &e) {
        throw FormatError("meta.json: " + std::string(e.what()));
    }
}

Dataset read_dataset(const std::filesystem::path &dir) {
    Dataset ds;
    ds.meta = read_dataset_meta(dir);
    for (const auto &v : ds.meta.views) {
        ds.clean.push_back(read_transient(view_path(dir, v.index, false)));
        ds.noisy.push_back(read_transient(view_path(dir, v.index, true)));
        const auto &n = ds.noisy.back();
        if (n.height() != ds.meta.height || n.width() != ds.meta.width ||
            n.n_bins() != ds.meta.time_axis.n_bins() || n.channels() != ds.meta.channels)
            throw FormatError("dataset: view " + std::to_string(v.index) +
                              " does not match meta.json");
    }
    return ds;
}

}  // namespace tnrf
