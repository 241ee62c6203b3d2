// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/renderer.h>

#include <tnrf/parallel.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tnrf {

void RenderConfig::validate(const TimeAxis &axis) const {
    if (!(step_size > 0))
        throw std::invalid_argument("RenderConfig: step_size must be > 0");
    if (!(t_near > 0 && t_near < t_far))
        throw std::invalid_argument("RenderConfig: need 0 < t_near < t_far");
    if (!(min_distance > 0))
        throw std::invalid_argument("RenderConfig: min_distance must be > 0");
    if (!(footprint_sigma >= 0) || footprint_samples < 1)
        throw std::invalid_argument("RenderConfig: invalid footprint");
    if (!(termination_threshold >= 0 && termination_threshold < 1))
        throw std::invalid_argument("RenderConfig: termination_threshold must be in [0, 1)");
    if (step_size > 0.5 * axis.bin_distance() * (1 + 1e-12))
        throw std::invalid_argument("RenderConfig: step_size exceeds half a bin (" +
                                    std::to_string(0.5 * axis.bin_distance()) + " m)");
}

void RaySamples::clear() {
    distances.clear();
    deltas.clear();
    sigma.clear();
    radiance.clear();
    transmittance.clear();
    alpha.clear();
    stencils.clear();
    pre.clear();
}

void march_into(const VoxelField &field, const Ray &ray, const RenderConfig &config,
                RaySamples &out) {
    out.clear();
    out.direction = ray.direction;
    out.channels = field.channels();
    auto seg = field.bbox().intersect(ray);
    if (!seg)
        return;
    const double start = std::max(config.t_near, seg->first - config.step_size);
    const double end = std::min(config.t_far, seg->second + config.step_size);
    if (!(end > start))
        return;
    const auto n = std::size_t(std::ceil((end - start) / config.step_size * (1 - 1e-12)));
    const std::size_t k_max = std::max<std::size_t>(n, 1);
    const double delta = (end - start) / double(k_max);
    const int ch = field.channels();

    double optical_depth = 0;
    for (std::size_t k = 0; k < k_max; ++k) {
        const double t = std::exp(-optical_depth);
        if (t < config.termination_threshold)
            break;
        const double d = start + (double(k) + 0.5) * delta;
        Stencil s = field.locate(ray.at(d));
        FieldPre pre = field.interpolate(s, ray.direction);
        double sigma = 0;
        std::array<double, kMaxChannels> rad{};
        if (s.inside) {
            sigma = activate_sigma(pre.sigma_pre);
            for (int c = 0; c < ch; ++c)
                rad[c] = activate_radiance(pre.radiance_pre[c]);
        }
        const double tau = sigma * delta;
        out.distances.push_back(d);
        out.deltas.push_back(delta);
        out.sigma.push_back(sigma);
        for (int c = 0; c < ch; ++c)
            out.radiance.push_back(rad[c]);
        out.transmittance.push_back(t);
        out.alpha.push_back(-std::expm1(-tau));
        out.stencils.push_back(s);
        out.pre.push_back(pre);
        optical_depth += tau;
    }
}

RaySamples march(const VoxelField &field, const Ray &ray, const RenderConfig &config,
                 const TimeAxis &axis) {
    config.validate(axis);
    RaySamples out;
    march_into(field, ray, config, out);
    return out;
}

void accumulate_transient_ray(const RaySamples &samples, const TimeAxis &axis,
                              double min_distance, double weight, std::span<double> out) {
    const int ch = samples.channels;
    const int n_bins = axis.n_bins();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double t = samples.transmittance[k];
        const double w = t * t * samples.alpha[k];
        if (w == 0)
            continue;
        const double d = std::max(samples.distances[k], min_distance);
        const double scale = weight * w / (d * d);
        double v[kMaxChannels];
        for (int c = 0; c < ch; ++c)
            v[c] = scale * samples.radiance[k * ch + c];
        splat_into(out, n_bins, ch, axis.fractional_bin_of_distance(samples.distances[k]), v);
    }
}

std::vector<double> render_transient_ray(const RaySamples &samples, const TimeAxis &axis,
                                         double min_distance) {
    std::vector<double> out(std::size_t(axis.n_bins()) * samples.channels, 0.0);
    accumulate_transient_ray(samples, axis, min_distance, 1.0, out);
    return out;
}

void render_pixel_into(const VoxelField &field, const CameraModel &camera, double px, double py,
                       const RenderConfig &config, const TimeAxis &axis,
                       const ImpulseResponse &impulse, PixelRender &out) {
    const std::size_t len = std::size_t(axis.n_bins()) * field.channels();
    out.footprint =
        footprint_samples(px, py, config.footprint_sigma, config.footprint_samples, config.seed);
    if (out.rays.size() < out.footprint.size())
        out.rays.resize(out.footprint.size());
    out.transient_pre.assign(len, 0.0);
    out.transient.resize(len);
    for (std::size_t s = 0; s < out.footprint.size(); ++s) {
        const auto &fp = out.footprint[s];
        march_into(field, camera.ray_for_pixel(fp.px, fp.py), config, out.rays[s]);
        accumulate_transient_ray(out.rays[s], axis, config.min_distance, fp.weight,
                                 out.transient_pre);
    }
    convolve_bins(out.transient_pre, impulse, axis.n_bins(), field.channels(), out.transient);
}

std::vector<double> render_pixel(const VoxelField &field, const CameraModel &camera, double px,
                                 double py, const RenderConfig &config, const TimeAxis &axis,
                                 const ImpulseResponse &impulse) {
    config.validate(axis);
    PixelRender pr;
    render_pixel_into(field, camera, px, py, config, axis, impulse, pr);
    return pr.transient;
}

double depth_from_ray(std::span<const RaySamples> rays, std::span<const double> weights,
                      const TimeAxis &axis) {
    if (rays.empty() || rays.size() != weights.size())
        throw std::invalid_argument("depth_from_ray: need one weight per footprint ray");
    std::vector<double> hist(axis.n_bins(), 0.0);
    for (std::size_t s = 0; s < rays.size(); ++s) {
        const auto &r = rays[s];
        for (std::size_t k = 0; k < r.size(); ++k) {
            std::int64_t bin = axis.bin_of_distance(r.distances[k]);
            if (bin >= 0 && bin < axis.n_bins())
                hist[bin] += weights[s] * r.transmittance[k] * r.alpha[k];
        }
    }
    int best = 0;
    for (int n = 1; n < axis.n_bins(); ++n)
        if (hist[n] > hist[best])
            best = n;
    if (!(hist[best] >= 1e-6))
        return kInvalidDepth;
    return axis.bin_center_distance(best);
}

double depth_from_pixel(const PixelRender &pixel, const TimeAxis &axis) {
    std::vector<double> w;
    for (const auto &f : pixel.footprint)
        w.push_back(f.weight);
    return depth_from_ray(std::span(pixel.rays).first(pixel.footprint.size()), w, axis);
}

RenderedView render_view(const VoxelField &field, const CameraModel &camera,
                         const RenderConfig &config, const TimeAxis &axis,
                         const ImpulseResponse &impulse) {
    config.validate(axis);
    const int h = camera.height(), w = camera.width(), ch = field.channels();
    RenderedView view{TransientImage(h, w, axis.n_bins(), ch, TransientKind::Clean),
                      Image(h, w, ch), Image(h, w, 1)};
    const std::size_t n_pixels = std::size_t(h) * w;
    parallel_chunks(n_pixels, [&](int, std::size_t b, std::size_t e) {
        PixelRender pr;
        for (std::size_t p = b; p < e; ++p) {
            int i = int(p / w), j = int(p % w);
            render_pixel_into(field, camera, j + 0.5, i + 0.5, config, axis, impulse, pr);
            std::copy(pr.transient.begin(), pr.transient.end(), view.transient.pixel(i, j).begin());
            for (int n = 0; n < axis.n_bins(); ++n)
                for (int c = 0; c < ch; ++c)
                    view.intensity.at(i, j, c) += pr.transient[std::size_t(n) * ch + c];
            view.depth.at(i, j) = depth_from_pixel(pr, axis);
        }
    });
    return view;
}

std::vector<RenderedView> render_views(const VoxelField &field, const CameraModel &camera,
                                       std::span<const RigidTransform> poses,
                                       const RenderConfig &config, const TimeAxis &axis,
                                       const ImpulseResponse &impulse) {
    std::vector<RenderedView> out;
    for (const auto &pose : poses) {
        if (!pose.is_valid())
            throw std::invalid_argument("render_views: invalid pose");
        out.push_back(render_view(field, camera.with_pose(pose), config, axis, impulse));
    }
    return out;
}

void backward_ray(const VoxelField &field, const RaySamples &samples,
                  std::span<const double> d_contribution, std::span<const double> d_termination,
                  double min_distance, ParamGradients &grads) {
    const int ch = samples.channels;
    const bool carve = !d_termination.empty();
    // suffix = sum_{k > j} (2 u_k + q_k): every later sample's dependence on
    // this sample's optical depth through T_k^2 (contribution) and T_k
    // (termination).
    double suffix = 0;
    for (std::size_t jj = samples.size(); jj-- > 0;) {
        const double t = samples.transmittance[jj];
        const double a = samples.alpha[jj];
        const double one_minus_a = 1.0 - a;
        const double d = std::max(samples.distances[jj], min_distance);
        const double g = 1.0 / (d * d);
        const double *e = &d_contribution[jj * ch];
        double u = 0, local = 0;
        double d_rad_pre[kMaxChannels] = {};
        for (int c = 0; c < ch; ++c) {
            const double cv = samples.radiance[jj * ch + c];
            u += e[c] * t * t * a * cv * g;
            local += e[c] * t * t * one_minus_a * cv * g;
            d_rad_pre[c] =
                e[c] * t * t * a * g * activate_radiance_grad(samples.pre[jj].radiance_pre[c]);
        }
        double q = 0;
        if (carve) {
            q = d_termination[jj] * t * a;
            local += d_termination[jj] * t * one_minus_a;
        }
        const double d_tau = local - suffix;
        suffix += 2.0 * u + q;
        const double d_sigma_pre =
            d_tau * samples.deltas[jj] * activate_sigma_grad(samples.pre[jj].sigma_pre);
        field.accumulate(samples.stencils[jj], samples.direction, d_sigma_pre, d_rad_pre, grads);
    }
}

void render_pixel_backward(const VoxelField &field, const PixelRender &pixel,
                           std::span<const double> d_transient, const TimeAxis &axis,
                           const ImpulseResponse &impulse, const RenderConfig &config,
                           std::span<const std::vector<double>> d_termination,
                           ParamGradients &grads) {
    const int ch = field.channels();
    const int n_bins = axis.n_bins();
    for (double v : d_transient)
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "render_pixel_backward: non-finite adjoint for ray at pixel ("
                << (pixel.footprint.empty() ? 0.0 : pixel.footprint[0].px) << ", "
                << (pixel.footprint.empty() ? 0.0 : pixel.footprint[0].py) << ")";
            throw std::runtime_error(msg.str());
        }
    std::vector<double> d_pre(std::size_t(n_bins) * ch);
    correlate_bins(d_transient, impulse, n_bins, ch, d_pre);
    std::vector<double> d_contrib;
    for (std::size_t s = 0; s < pixel.footprint.size(); ++s) {
        const RaySamples &r = pixel.rays[s];
        const double w = pixel.footprint[s].weight;
        d_contrib.assign(r.size() * ch, 0.0);
        double tmp[kMaxChannels];
        for (std::size_t k = 0; k < r.size(); ++k) {
            gather_from(d_pre, n_bins, ch, axis.fractional_bin_of_distance(r.distances[k]), tmp);
            for (int c = 0; c < ch; ++c)
                d_contrib[k * ch + c] = w * tmp[c];
        }
        std::span<const double> d_term;
        if (s < d_termination.size())
            d_term = d_termination[s];
        backward_ray(field, r, d_contrib, d_term, config.min_distance, grads);
    }
}

ParamGradients render_backward(const VoxelField &field, std::span<const PixelRef> batch,
                               std::span<const std::vector<double>> d_transient,
                               const RenderConfig &config, const TimeAxis &axis,
                               const ImpulseResponse &impulse) {
    config.validate(axis);
    if (batch.size() != d_transient.size())
        throw std::invalid_argument("render_backward: one adjoint per pixel required");
    const int chunks = chunk_count(batch.size());
    std::vector<ParamGradients> partial(chunks, ParamGradients(field));
    parallel_chunks(batch.size(), [&](int chunk, std::size_t b, std::size_t e) {
        PixelRender pr;
        for (std::size_t p = b; p < e; ++p) {
            const auto &ref = batch[p];
            render_pixel_into(field, *ref.camera, ref.px, ref.py, config, axis, impulse, pr);
            render_pixel_backward(field, pr, d_transient[p], axis, impulse, config, {},
                                  partial[chunk]);
        }
    });
    ParamGradients total = std::move(partial[0]);
    for (int c = 1; c < chunks; ++c)
        total.add(partial[c]);
    total.check_finite();
    return total;
}

}  // namespace tnrf
