// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <tnrf/eval.h>
#include <tnrf/training.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tnrf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for problems with inputs on disk or their contents.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulateArgs {
    std::string scene = "builtin:sphere_on_plane";
    int views = 5;
    int test_views = 1;
    double radius = 1.5;
    double elevation = 30;
    double azimuth0 = 0;
    int width = 64, height = 64;
    double fx = 140;
    int bins = 1500;
    double bin_ps = 8;
    double t0_ps = 0;
    double pulse_fwhm_ps = 70;
    double counts_target = 2850;
    double bg_per_bin = 0.001;
    double n_pulses = 1e5;
    double efficiency = 0.35;
    double footprint_sigma = 0.15;
    int footprint_samples = 16;
    int channels = 1;
    std::uint64_t seed = 0;
    std::string out;
};

struct TrainArgs {
    std::string data;
    int views = 0;
    int iters = 20000;
    int batch = 512;
    double lr = 1e-3;
    double lambda_sc = kLambdaScSimulated;
    int grid = 64;
    std::uint64_t seed = 0;
    std::string basis = "iso";
    int footprint_samples = 1;
    int log_every = 100;
    int checkpoint_every = 0;
    std::optional<double> background;
    std::string out;
};

struct RenderArgs {
    std::string model;
    std::string data;
    std::vector<int> views;
    bool all_views = false;
    int footprint_samples = 1;
    std::string out;
};

struct EvalArgs {
    std::string pred, ref, out;
};

struct InspectArgs {
    std::string path;
    bool as_json = false;
};

void ensure_dir(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream f(path);
    if (!f || !(f << text))
        throw DataError("cannot write " + path.string());
}

json read_json(const fs::path &path) {
    std::ifstream f(path);
    if (!f)
        throw DataError("cannot open " + path.string());
    try {
        return json::parse(f);
    } catch (const json::exception &e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

int do_simulate(const SimulateArgs &a, std::ostream &out) {
    DatasetRequest req;
    req.scene = load_scene(a.scene);
    req.config.time_axis = TimeAxis(a.bins, a.bin_ps * 1e-12, a.t0_ps * 1e-12);
    req.config.impulse = ImpulseResponse::gaussian(a.pulse_fwhm_ps / a.bin_ps);
    req.config.noise.n_pulses = a.n_pulses;
    req.config.noise.efficiency = a.efficiency;
    req.config.noise.background_per_bin = a.bg_per_bin;
    req.config.footprint_sigma = a.footprint_sigma;
    req.config.footprint_samples = a.footprint_samples;
    req.config.channels = a.channels;
    req.config.rng_seed = a.seed;
    req.counts_target = a.counts_target;
    req.camera = CameraModel::pinhole(a.height, a.width, {a.fx, a.fx, a.width / 2.0, a.height / 2.0},
                                      {});
    const Vec3 target = req.scene.bounds.center();
    for (const auto &p : circular_poses(a.views, a.radius, a.elevation, a.azimuth0, target))
        req.views.push_back({p, true});
    if (a.test_views > 0) {
        // Held-out views sit between the training azimuths.
        const double step = 360.0 / std::max(a.views, 1);
        for (int k = 0; k < a.test_views; ++k) {
            double az = a.azimuth0 + step * (k % std::max(a.views, 1) + 0.5);
            req.views.push_back({circular_poses(1, a.radius, a.elevation, az, target)[0], false});
        }
    }
    Dataset ds = generate_dataset(req, a.out);
    double occupied = 0;
    for (std::size_t k = 0; k < ds.noisy.size(); ++k)
        occupied += occupied_pixel_mean(ds.noisy[k], ds.clean[k]);
    out << "wrote " << ds.noisy.size() << " views to " << a.out << '\n'
        << "flux_scale " << ds.meta.flux_scale << '\n'
        << "occupied_pixel_mean " << occupied / double(ds.noisy.size()) << '\n'
        << "max_count " << ds.meta.max_count << '\n';
    if (ds.stats.clipped_hits > 0)
        out << "warning: " << ds.stats.clipped_hits << " of " << ds.stats.hits
            << " returns fall outside the time axis\n";
    return kOk;
}

int do_train(const TrainArgs &a, std::ostream &out) {
    Dataset ds = read_dataset(a.data);
    TrainConfig config;
    config.lambda_sc = a.lambda_sc;
    config.learning_rate = a.lr;
    config.batch_rays = a.batch;
    config.total_iters = a.iters;
    config.seed = a.seed;
    config.grid = a.grid;
    config.background_level = a.background;
    config.basis = a.basis == "sh1" ? RadianceBasis::SphericalHarmonic1 : RadianceBasis::Isotropic;
    config.log_every = a.log_every;
    config.checkpoint_every = a.checkpoint_every;
    config.validate();
    TrainingData data = prepare_training_data(ds, config, a.views);
    RenderConfig render = default_render_config(ds.meta);
    render.footprint_samples = a.footprint_samples;
    if (a.footprint_samples == 1)
        render.footprint_sigma = 0;

    const fs::path dir = a.out;
    ensure_dir(dir);
    json echo = {{"data", a.data},
                 {"views", int(data.measured.size())},
                 {"iters", a.iters},
                 {"batch", a.batch},
                 {"lr", a.lr},
                 {"lambda_sc", a.lambda_sc},
                 {"grid", a.grid},
                 {"seed", a.seed},
                 {"basis", a.basis},
                 {"decay_gamma", config.decay_gamma},
                 {"milestone_fractions", config.milestone_fractions},
                 {"background_level", data.background_level},
                 {"count_scale", data.count_scale},
                 {"step_size", render.step_size},
                 {"min_distance", render.min_distance},
                 {"footprint_samples", render.footprint_samples},
                 {"footprint_sigma", render.footprint_sigma},
                 {"termination_threshold", render.termination_threshold}};
    write_text(dir / "config.json", echo.dump(2) + "\n");

    std::ofstream metrics(dir / "metrics.ndjson");
    if (!metrics)
        throw DataError("cannot write " + (dir / "metrics.ndjson").string());
    TrainCallbacks cb;
    cb.on_log = [&](const IterationLog &l) {
        json j = {{"iteration", l.iteration}, {"loss_tau", l.loss_tau}, {"loss_sc", l.loss_sc},
                  {"lr", l.lr}, {"wall_seconds", l.wall_seconds}};
        metrics << j.dump() << '\n' << std::flush;
        out << "iter " << l.iteration << " loss_tau " << l.loss_tau << " loss_sc " << l.loss_sc
            << " lr " << l.lr << '\n';
    };
    cb.on_checkpoint = [&](int iteration, const VoxelField &field) {
        write_checkpoint(dir / ("checkpoint_" + std::to_string(iteration) + ".tnrf"), field);
    };
    TrainResult result = train(data, render, config, cb);
    write_checkpoint(dir / "model.tnrf", result.field);
    out << "wrote " << (dir / "model.tnrf").string() << '\n';
    return kOk;
}

int do_render(const RenderArgs &a, std::ostream &out) {
    fs::path model = a.model;
    fs::path model_dir = model.parent_path();
    if (fs::is_directory(model)) {
        model_dir = model;
        model = model / "model.tnrf";
    }
    VoxelField field = read_checkpoint(model);
    const DatasetMeta meta = read_dataset_meta(a.data);
    RenderConfig render = default_render_config(meta);
    double count_scale = 1.0;
    if (fs::exists(model_dir / "config.json")) {
        json cfg = read_json(model_dir / "config.json");
        count_scale = cfg.value("count_scale", 1.0);
        render.step_size = cfg.value("step_size", render.step_size);
        render.min_distance = cfg.value("min_distance", render.min_distance);
        render.termination_threshold =
            cfg.value("termination_threshold", render.termination_threshold);
    }
    render.footprint_samples = a.footprint_samples;
    if (a.footprint_samples == 1)
        render.footprint_sigma = 0;
    if (field.channels() != meta.channels)
        throw DataError("model channels do not match the dataset");

    std::vector<int> indices = a.views;
    if (indices.empty())
        for (const auto &v : meta.views)
            if (a.all_views || !v.train)
                indices.push_back(v.index);
    const fs::path dir = a.out;
    ensure_dir(dir);
    write_dataset_meta(dir, meta);
    for (int idx : indices) {
        auto it = std::find_if(meta.views.begin(), meta.views.end(),
                               [&](const DatasetView &v) { return v.index == idx; });
        if (it == meta.views.end())
            throw DataError("dataset has no view " + std::to_string(idx));
        RenderedView rv = render_view(field, meta.camera(it->pose), render, meta.time_axis,
                                      meta.impulse);
        for (double &v : rv.transient.data())
            v *= count_scale;
        for (double &v : rv.intensity.data)
            v *= count_scale;
        write_transient(view_path(dir, idx, false), rv.transient);
        write_image(depth_path(dir, idx), rv.depth);
        write_image(intensity_path(dir, idx), rv.intensity);
        const std::string stem = "view_" + std::to_string(idx);
        write_pgm_preview(dir / (stem + "_depth.pgm"), rv.depth);
        write_pgm_preview(dir / (stem + "_intensity.pgm"), rv.intensity);
        out << "rendered view " << idx << '\n';
    }
    return kOk;
}

int do_eval(const EvalArgs &a, std::ostream &out) {
    MetricsReport report = evaluate_directories(a.pred, a.ref);
    report.config = json{{"pred", a.pred}, {"ref", a.ref}}.dump();
    write_text(a.out, report.to_json() + "\n");
    for (const auto &v : report.views) {
        out << "view " << v.view << " psnr ";
        if (v.psnr.infinite)
            out << "inf";
        else
            out << std::fixed << std::setprecision(2) << v.psnr.db;
        out << " depth_l1 " << std::setprecision(5) << v.depth.mean << '\n';
        out.unsetf(std::ios::floatfield);
    }
    out << "mean psnr ";
    if (report.mean_psnr.infinite)
        out << "inf";
    else
        out << report.mean_psnr.db;
    out << " depth_l1 " << report.mean_depth_l1 << '\n';
    return kOk;
}

int do_inspect(const InspectArgs &a, std::ostream &out) {
    const fs::path path = a.path;
    std::vector<HistogramStats> stats;
    if (fs::is_directory(path)) {
        Dataset ds = read_dataset(path);
        for (std::size_t k = 0; k < ds.noisy.size(); ++k) {
            HistogramStats s = histogram_stats(ds.noisy[k], &ds.clean[k], ds.meta.impulse);
            s.view = ds.meta.views[k].index;
            stats.push_back(s);
        }
    } else {
        TransientImage t = read_transient(path);
        stats.push_back(histogram_stats(t, nullptr, ImpulseResponse::delta()));
    }
    if (a.as_json) {
        json arr = json::array();
        for (const auto &s : stats)
            arr.push_back({{"view", s.view},
                           {"total_counts", s.total_counts},
                           {"occupied_pixels", s.occupied_pixels},
                           {"occupied_pixel_mean", s.occupied_pixel_mean},
                           {"background_estimate", s.background_estimate}});
        out << arr.dump(2) << '\n';
        return kOk;
    }
    for (const auto &s : stats)
        out << "view " << s.view << " total_counts " << s.total_counts << " occupied_pixels "
            << s.occupied_pixels << " occupied_pixel_mean " << s.occupied_pixel_mean
            << " background_estimate " << s.background_estimate << '\n';
    return kOk;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Transient neural radiance fields for single-photon lidar", "tnrf"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto *s = app.add_subcommand("simulate", "Simulate a multiview lidar dataset");
    s->add_option("--scene", sim.scene, "builtin:sphere_on_plane, builtin:two_plane or a JSON file")
        ->capture_default_str();
    s->add_option("--views", sim.views, "Training views")->capture_default_str();
    s->add_option("--test-views", sim.test_views, "Held-out views")->capture_default_str();
    s->add_option("--radius", sim.radius, "Camera orbit radius (m)")->capture_default_str();
    s->add_option("--elevation", sim.elevation, "Camera elevation (deg)")->capture_default_str();
    s->add_option("--azimuth0", sim.azimuth0, "First azimuth (deg)")->capture_default_str();
    s->add_option("--width", sim.width)->capture_default_str();
    s->add_option("--height", sim.height)->capture_default_str();
    s->add_option("--fx", sim.fx, "Focal length (px)")->capture_default_str();
    s->add_option("--bins", sim.bins)->capture_default_str();
    s->add_option("--bin-ps", sim.bin_ps, "Bin width (ps)")->capture_default_str();
    s->add_option("--t0-ps", sim.t0_ps, "Start of the first bin (ps)")->capture_default_str();
    s->add_option("--pulse-fwhm-ps", sim.pulse_fwhm_ps)->capture_default_str();
    s->add_option("--counts-target", sim.counts_target,
                  "Mean counts per occupied pixel (<= 0 disables calibration)")
        ->capture_default_str();
    s->add_option("--bg-per-bin", sim.bg_per_bin)->capture_default_str();
    s->add_option("--pulses", sim.n_pulses)->capture_default_str();
    s->add_option("--efficiency", sim.efficiency)->capture_default_str();
    s->add_option("--footprint-sigma", sim.footprint_sigma, "(px)")->capture_default_str();
    s->add_option("--footprint-samples", sim.footprint_samples)->capture_default_str();
    s->add_option("--channels", sim.channels)->check(CLI::IsMember({1, 3}))->capture_default_str();
    s->add_option("--seed", sim.seed)->capture_default_str();
    s->add_option("--out", sim.out, "Output directory")->required();

    TrainArgs tr;
    auto *t = app.add_subcommand("train", "Fit a voxel field to a dataset");
    t->add_option("--data", tr.data, "Dataset directory")->required();
    t->add_option("--views", tr.views, "Training views to use (0 = all)")->capture_default_str();
    t->add_option("--iters", tr.iters)->capture_default_str();
    t->add_option("--batch", tr.batch, "Pixels per iteration")->capture_default_str();
    t->add_option("--lr", tr.lr)->capture_default_str();
    t->add_option("--lambda-sc", tr.lambda_sc, "Space-carving weight")->capture_default_str();
    t->add_option("--grid", tr.grid, "Nodes per axis")->capture_default_str();
    t->add_option("--seed", tr.seed)->capture_default_str();
    t->add_option("--basis", tr.basis, "Radiance basis")
        ->check(CLI::IsMember({"iso", "sh1"}))
        ->capture_default_str();
    t->add_option("--footprint-samples", tr.footprint_samples)->capture_default_str();
    t->add_option("--background", tr.background, "Carving threshold (default: dataset B)");
    t->add_option("--log-every", tr.log_every)->capture_default_str();
    t->add_option("--checkpoint-every", tr.checkpoint_every)->capture_default_str();
    t->add_option("--out", tr.out, "Output directory")->required();

    RenderArgs rd;
    auto *r = app.add_subcommand("render", "Render transients, depth and intensity");
    r->add_option("--model", rd.model, "Checkpoint file or training output directory")
        ->required();
    r->add_option("--data", rd.data, "Dataset directory (cameras and time axis)")->required();
    r->add_option("--view", rd.views, "View index (repeatable; default: held-out views)");
    r->add_flag("--all-views", rd.all_views);
    r->add_option("--footprint-samples", rd.footprint_samples)->capture_default_str();
    r->add_option("--out", rd.out, "Output directory")->required();

    EvalArgs ev;
    auto *e = app.add_subcommand("eval", "Compare rendered views against references");
    e->add_option("--pred", ev.pred, "Directory with view_<k>_clean.trns")->required();
    e->add_option("--ref", ev.ref, "Dataset directory")->required();
    e->add_option("--out", ev.out, "Report path (JSON)")->required();

    InspectArgs in;
    auto *i = app.add_subcommand("inspect", "Histogram statistics of a dataset or .trns file");
    i->add_option("path", in.path)->required();
    i->add_flag("--json", in.as_json);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &ex) {
        app.exit(ex, out, err);
        return kOk;
    } catch (const CLI::ParseError &ex) {
        app.exit(ex, out, err);
        return kUsage;
    }

    try {
        if (*s)
            return do_simulate(sim, out);
        if (*t)
            return do_train(tr, out);
        if (*r)
            return do_render(rd, out);
        if (*e)
            return do_eval(ev, out);
        if (*i)
            return do_inspect(in, out);
    } catch (const std::exception &ex) {
        err << "error: " << ex.what() << '\n';
        return kDataError;
    }
    return kUsage;
}

}  // namespace tnrf::cli
