// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/eval.h>

#include <tnrf/simulator.h>
#include <tnrf/training.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tnrf {

namespace {

void require_same_shape(const Image &a, const Image &b, const char *what) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw std::invalid_argument(std::string(what) + ": image shapes differ");
}

double display_value(double v, double peak) {
    return std::pow(std::clamp(v / peak, 0.0, 1.0), kDisplayGamma);
}

}  // namespace

PsnrResult intensity_psnr(const Image &rendered, const Image &reference, double peak) {
    require_same_shape(rendered, reference, "intensity_psnr");
    if (!(peak > 0) || !std::isfinite(peak))
        throw std::invalid_argument("intensity_psnr: peak must be positive");
    if (rendered.data.empty())
        throw std::invalid_argument("intensity_psnr: empty images");
    double sse = 0;
    for (std::size_t k = 0; k < rendered.data.size(); ++k) {
        double d = display_value(rendered.data[k], peak) - display_value(reference.data[k], peak);
        sse += d * d;
    }
    const double mse = sse / double(rendered.data.size());
    if (mse == 0)
        return {std::numeric_limits<double>::infinity(), true};
    return {-10.0 * std::log10(mse), false};
}

DepthL1 depth_l1(const Image &rendered, const Image &reference) {
    require_same_shape(rendered, reference, "depth_l1");
    DepthL1 out;
    double sum = 0;
    for (std::size_t k = 0; k < rendered.data.size(); ++k) {
        const double a = rendered.data[k], b = reference.data[k];
        if (a == kInvalidDepth || b == kInvalidDepth || !std::isfinite(a) || !std::isfinite(b)) {
            ++out.invalid;
            continue;
        }
        sum += std::abs(a - b);
        ++out.valid;
    }
    if (out.valid == 0)
        throw std::invalid_argument("depth_l1: no pixel has a valid depth in both maps");
    out.mean = sum / double(out.valid);
    return out;
}

double lmf_depth(std::span<const double> histogram, const ImpulseResponse &impulse,
                 const TimeAxis &axis) {
    const int n_bins = axis.n_bins();
    if (histogram.size() != std::size_t(n_bins))
        throw std::invalid_argument("lmf_depth: histogram length must equal the bin count");
    bool any = false;
    for (double v : histogram) {
        if (v < 0 || !std::isfinite(v))
            throw std::invalid_argument("lmf_depth: histogram entries must be finite and >= 0");
        any |= v > 0;
    }
    if (!any)
        return kInvalidDepth;
    // Offsetting by -ln(eps) keeps the score equal to the full log-likelihood
    // up to a constant, so bins past the kernel support count as ln(eps).
    auto k = impulse.kernel();
    const int z = impulse.zero_index();
    std::vector<double> logf(k.size());
    for (std::size_t m = 0; m < k.size(); ++m)
        logf[m] = std::log(k[m] + kLogFloor) - std::log(kLogFloor);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_bins; ++n) {
        double score = 0;
        const int m_lo = std::max(0, z - n);
        const int m_hi = std::min(int(k.size()), n_bins - n + z);
        for (int m = m_lo; m < m_hi; ++m)
            score += logf[m] * histogram[n + m - z];
        if (score > best_score) {
            best_score = score;
            best = n;
        }
    }
    return axis.bin_center_distance(best);
}

Image lmf_depth_image(const TransientImage &transient, const ImpulseResponse &impulse,
                      const TimeAxis &axis) {
    if (transient.n_bins() != axis.n_bins())
        throw std::invalid_argument("lmf_depth_image: bin count does not match the time axis");
    Image out(transient.height(), transient.width(), 1);
    const int ch = transient.channels();
    std::vector<double> h(axis.n_bins());
    for (int i = 0; i < transient.height(); ++i)
        for (int j = 0; j < transient.width(); ++j) {
            auto px = transient.pixel(i, j);
            for (int n = 0; n < axis.n_bins(); ++n) {
                double s = 0;
                for (int c = 0; c < ch; ++c)
                    s += px[std::size_t(n) * ch + c];
                h[n] = s;
            }
            out.at(i, j) = lmf_depth(h, impulse, axis);
        }
    return out;
}

void MetricsReport::finalize() {
    mean_psnr = {};
    mean_depth_l1 = 0;
    if (views.empty())
        return;
    double psnr = 0, depth = 0;
    for (const auto &v : views) {
        mean_psnr.infinite |= v.psnr.infinite;
        psnr += v.psnr.db;
        depth += v.depth.mean;
    }
    mean_psnr.db = mean_psnr.infinite ? std::numeric_limits<double>::infinity()
                                      : psnr / double(views.size());
    mean_depth_l1 = depth / double(views.size());
}

namespace {

nlohmann::json psnr_json(const PsnrResult &p) {
    nlohmann::json j;
    j["db"] = p.infinite ? nlohmann::json(nullptr) : nlohmann::json(p.db);
    j["infinite"] = p.infinite;
    return j;
}

}  // namespace

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    auto arr = nlohmann::json::array();
    for (const auto &v : views) {
        arr.push_back({{"view", v.view},
                       {"psnr", psnr_json(v.psnr)},
                       {"depth_l1", v.depth.mean},
                       {"depth_valid_pixels", v.depth.valid},
                       {"depth_invalid_pixels", v.depth.invalid},
                       {"pixels", v.pixels}});
    }
    j["views"] = arr;
    j["mean"] = {{"psnr", psnr_json(mean_psnr)}, {"depth_l1", mean_depth_l1}};
    if (!config.empty()) {
        auto parsed = nlohmann::json::parse(config, nullptr, false);
        j["config"] = parsed.is_discarded() ? nlohmann::json(config) : parsed;
    }
    return j.dump(2);
}

ViewMetrics evaluate_view(int view, const TransientImage &pred, const Image &pred_depth,
                          const TransientImage &ref, const Image &ref_depth) {
    if (pred.height() != ref.height() || pred.width() != ref.width() ||
        pred.n_bins() != ref.n_bins() || pred.channels() != ref.channels())
        throw std::invalid_argument("evaluate_view: transient shapes differ for view " +
                                    std::to_string(view));
    Image pi = integrate_intensity(pred), ri = integrate_intensity(ref);
    double peak = 0;
    for (double v : ri.data)
        peak = std::max(peak, v);
    ViewMetrics m;
    m.view = view;
    m.psnr = intensity_psnr(pi, ri, peak);
    m.depth = depth_l1(pred_depth, ref_depth);
    m.pixels = std::int64_t(pred.height()) * pred.width();
    return m;
}

std::filesystem::path depth_path(const std::filesystem::path &dir, int index) {
    return dir / ("view_" + std::to_string(index) + "_depth.timg");
}

std::filesystem::path intensity_path(const std::filesystem::path &dir, int index) {
    return dir / ("view_" + std::to_string(index) + "_intensity.timg");
}

MetricsReport evaluate_directories(const std::filesystem::path &pred,
                                   const std::filesystem::path &ref) {
    const DatasetMeta meta = read_dataset_meta(ref);
    MetricsReport report;
    for (const auto &v : meta.views) {
        const auto pred_file = view_path(pred, v.index, false);
        if (!std::filesystem::exists(pred_file))
            continue;
        TransientImage p = read_transient(pred_file);
        TransientImage r = read_transient(view_path(ref, v.index, false));
        Image rd = lmf_depth_image(r, meta.impulse, meta.time_axis);
        Image pd = std::filesystem::exists(depth_path(pred, v.index))
                       ? read_image(depth_path(pred, v.index))
                       : lmf_depth_image(p, meta.impulse, meta.time_axis);
        report.views.push_back(evaluate_view(v.index, p, pd, r, rd));
    }
    if (report.views.empty())
        throw std::invalid_argument("evaluate: no view of " + ref.string() + " found in " +
                                    pred.string());
    report.finalize();
    return report;
}

HistogramStats histogram_stats(const TransientImage &counts, const TransientImage *clean,
                               const ImpulseResponse &impulse) {
    HistogramStats s;
    s.background_estimate = estimate_background(counts, impulse);
    const double bg_total = s.background_estimate / 3.0 * counts.n_bins() * counts.channels();
    const double threshold = bg_total + 5.0 * std::sqrt(bg_total) + 1.0;
    double occupied_total = 0;
    for (int i = 0; i < counts.height(); ++i)
        for (int j = 0; j < counts.width(); ++j) {
            double total = 0;
            for (double v : counts.pixel(i, j))
                total += v;
            s.total_counts += total;
            bool occupied = false;
            if (clean) {
                for (double v : clean->pixel(i, j))
                    occupied |= v > 0;
            } else {
                occupied = total > threshold;
            }
            if (occupied) {
                ++s.occupied_pixels;
                occupied_total += total;
            }
        }
    s.occupied_pixel_mean = s.occupied_pixels ? occupied_total / double(s.occupied_pixels) : 0.0;
    return s;
}

}  // namespace tnrf
