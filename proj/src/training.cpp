// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/training.h>

#include <tnrf/parallel.h>
#include <tnrf/random.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tnrf {

double loss_tau_into(std::span<const double> rendered, std::span<const double> measured,
                     std::span<double> adjoint) {
    if (rendered.size() != measured.size() || adjoint.size() != rendered.size())
        throw std::invalid_argument("loss_tau: shape mismatch");
    double total = 0;
    for (std::size_t k = 0; k < rendered.size(); ++k) {
        const double r = rendered[k];
        if (!(r >= 0))
            throw std::domain_error("loss_tau: rendered entry " + std::to_string(k) +
                                    " is negative or NaN");
        const double diff = std::log1p(measured[k]) - std::log1p(r);
        total += std::abs(diff);
        const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        adjoint[k] = -sign / (r + 1.0);
    }
    return total;
}

LossValue loss_tau(std::span<const double> rendered, std::span<const double> measured) {
    LossValue out;
    out.adjoint.resize(rendered.size());
    out.value = loss_tau_into(rendered, measured, out.adjoint);
    return out;
}

std::vector<std::uint8_t> carving_mask_pixel(std::span<const double> counts, int n_bins,
                                             int channels, double background_level) {
    std::vector<std::uint8_t> mask(n_bins, 0);
    for (int n = 0; n < n_bins; ++n) {
        bool below = true;
        for (int c = 0; c < channels; ++c)
            below &= counts[std::size_t(n) * channels + c] < background_level;
        mask[n] = below;
    }
    return mask;
}

std::vector<std::uint8_t> carving_mask(const TransientImage &measured, double background_level) {
    if (measured.kind() != TransientKind::NoisyCounts)
        throw std::invalid_argument("carving_mask: expected noisy counts");
    std::vector<std::uint8_t> mask;
    mask.reserve(std::size_t(measured.height()) * measured.width() * measured.n_bins());
    for (int i = 0; i < measured.height(); ++i)
        for (int j = 0; j < measured.width(); ++j) {
            auto m = carving_mask_pixel(measured.pixel(i, j), measured.n_bins(),
                                        measured.channels(), background_level);
            mask.insert(mask.end(), m.begin(), m.end());
        }
    return mask;
}

CarvingLoss loss_sc(std::span<const RaySamples> rays, std::span<const double> weights,
                    std::span<const std::uint8_t> mask, const TimeAxis &axis, double scale) {
    if (rays.size() != weights.size())
        throw std::invalid_argument("loss_sc: one weight per ray required");
    if (mask.size() != std::size_t(axis.n_bins()))
        throw std::invalid_argument("loss_sc: mask must have one entry per bin");
    CarvingLoss out;
    out.d_termination.resize(rays.size());
    for (std::size_t s = 0; s < rays.size(); ++s) {
        const auto &r = rays[s];
        auto &d = out.d_termination[s];
        d.assign(r.size(), 0.0);
        for (std::size_t k = 0; k < r.size(); ++k) {
            std::int64_t bin = axis.bin_of_distance(r.distances[k]);
            if (bin < 0 || bin >= axis.n_bins() || !mask[bin])
                continue;
            out.value += weights[s] * r.transmittance[k] * r.alpha[k];
            d[k] = scale * weights[s];
        }
    }
    return out;
}

double total_loss(const LossTerms &terms) { return terms.total(); }

double estimate_background(const TransientImage &counts, const ImpulseResponse &impulse) {
    const int n_bins = counts.n_bins(), ch = counts.channels();
    std::int64_t earliest = n_bins;
    for (int i = 0; i < counts.height(); ++i)
        for (int j = 0; j < counts.width(); ++j) {
            auto px = counts.pixel(i, j);
            int peak = 0;
            double peak_value = 0;
            for (int n = 0; n < n_bins; ++n) {
                double s = 0;
                for (int c = 0; c < ch; ++c)
                    s += px[std::size_t(n) * ch + c];
                if (s > peak_value) {
                    peak_value = s;
                    peak = n;
                }
            }
            // A bin with several counts is treated as a surface return.
            if (peak_value >= 3)
                earliest = std::min<std::int64_t>(earliest, peak - impulse.zero_index() - 3);
        }
    earliest = std::max<std::int64_t>(earliest, 0);
    const int used = earliest > 0 ? int(earliest) : n_bins;
    double total = 0;
    for (int i = 0; i < counts.height(); ++i)
        for (int j = 0; j < counts.width(); ++j) {
            auto px = counts.pixel(i, j);
            for (std::size_t k = 0; k < std::size_t(used) * ch; ++k)
                total += px[k];
        }
    double mean = total / (double(counts.height()) * counts.width() * used * ch);
    return 3.0 * mean;
}

void TrainConfig::validate() const {
    if (!(lambda_sc >= 0))
        throw std::invalid_argument("TrainConfig: lambda_sc must be >= 0");
    if (!(learning_rate > 0))
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(decay_gamma > 0 && decay_gamma <= 1))
        throw std::invalid_argument("TrainConfig: decay_gamma must be in (0, 1]");
    for (std::size_t k = 0; k < milestone_fractions.size(); ++k) {
        double f = milestone_fractions[k];
        if (!(f > 0 && f < 1))
            throw std::invalid_argument("TrainConfig: milestones must lie in (0, 1)");
        if (k > 0 && !(f > milestone_fractions[k - 1]))
            throw std::invalid_argument("TrainConfig: milestones must be strictly increasing");
    }
    if (batch_rays < 1)
        throw std::invalid_argument("TrainConfig: batch_rays must be >= 1");
    if (total_iters < 0)
        throw std::invalid_argument("TrainConfig: total_iters must be >= 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0))
        throw std::invalid_argument("TrainConfig: invalid moment parameters");
    if (grid < 2)
        throw std::invalid_argument("TrainConfig: grid must be >= 2");
}

std::vector<int> TrainConfig::milestone_iterations() const {
    std::vector<int> out;
    for (double f : milestone_fractions)
        out.push_back(int(std::floor(f * total_iters)));
    return out;
}

double TrainConfig::lr_at(int iteration) const {
    double lr = learning_rate;
    for (int m : milestone_iterations())
        if (iteration >= m)
            lr *= decay_gamma;
    return lr;
}

OptimizerState OptimizerState::for_field(const VoxelField &field) {
    OptimizerState s;
    s.m_sigma.assign(field.sigma_pre().size(), 0.0);
    s.v_sigma.assign(field.sigma_pre().size(), 0.0);
    s.m_radiance.assign(field.radiance_pre().size(), 0.0);
    s.v_radiance.assign(field.radiance_pre().size(), 0.0);
    return s;
}

void optimizer_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                    std::span<double> v, std::int64_t step, double lr, double beta1, double beta2,
                    double epsilon) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw std::invalid_argument("optimizer_step: shape mismatch");
    if (step < 1)
        throw std::invalid_argument("optimizer_step: step counts from 1");
    const double bc1 = 1.0 - std::pow(beta1, double(step));
    const double bc2 = 1.0 - std::pow(beta2, double(step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        if (!std::isfinite(g))
            throw std::runtime_error("optimizer_step: non-finite gradient at " + std::to_string(k));
        m[k] = beta1 * m[k] + (1 - beta1) * g;
        v[k] = beta2 * v[k] + (1 - beta2) * g * g;
        params[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + epsilon);
    }
}

void optimizer_step(VoxelField &field, const ParamGradients &grads, OptimizerState &state,
                    double lr, const TrainConfig &config) {
    ++state.step;
    optimizer_step(field.sigma_pre(), grads.sigma, state.m_sigma, state.v_sigma, state.step, lr,
                   config.beta1, config.beta2, config.epsilon);
    optimizer_step(field.radiance_pre(), grads.radiance, state.m_radiance, state.v_radiance,
                   state.step, lr, config.beta1, config.beta2, config.epsilon);
}

TrainingData prepare_training_data(const Dataset &dataset, const TrainConfig &config,
                                   int max_views) {
    TrainingData data;
    data.meta = dataset.meta;
    std::vector<std::size_t> selected;
    for (std::size_t k = 0; k < dataset.meta.views.size(); ++k)
        if (dataset.meta.views[k].train && (max_views <= 0 || int(selected.size()) < max_views))
            selected.push_back(k);
    if (selected.empty())
        throw std::invalid_argument("training: dataset has no training views");
    if (max_views > 0 && int(selected.size()) < max_views)
        throw std::invalid_argument("training: dataset has only " +
                                    std::to_string(selected.size()) + " training views");
    data.background_level = config.background_level.value_or(dataset.meta.noise.background_per_bin);
    double max_count = 0;
    for (std::size_t k : selected)
        for (double v : dataset.noisy[k].data())
            max_count = std::max(max_count, v);
    if (!(max_count > 0))
        throw std::invalid_argument("training: measurements contain no counts");
    data.count_scale = max_count;
    for (std::size_t k : selected) {
        const auto &noisy = dataset.noisy[k];
        if (noisy.kind() != TransientKind::NoisyCounts)
            throw std::invalid_argument("training: view is not a noisy-count transient");
        data.cameras.push_back(dataset.meta.camera(dataset.meta.views[k].pose));
        data.masks.push_back(carving_mask(noisy, data.background_level));
        TransientImage m = noisy;
        for (double &v : m.data())
            v /= max_count;
        data.measured.push_back(std::move(m));
    }
    return data;
}

RenderConfig default_render_config(const DatasetMeta &meta) {
    RenderConfig rc;
    rc.step_size = 0.5 * meta.time_axis.bin_distance();
    rc.min_distance = 0.01 * length(meta.bounds.diagonal());
    rc.footprint_sigma = meta.footprint_sigma;
    rc.footprint_samples = meta.footprint_samples;
    rc.seed = meta.seed;
    rc.termination_threshold = 1e-4;
    return rc;
}

namespace {

// Endless stream of (view, pixel) pairs, reshuffled every epoch.
class PixelSampler {
  public:
    PixelSampler(std::size_t total, std::uint64_t seed) : order_(total), rng_(seed, 0x5eed) {
        std::iota(order_.begin(), order_.end(), 0);
        shuffle();
    }
    std::size_t next() {
        if (pos_ == order_.size()) {
            shuffle();
            pos_ = 0;
        }
        return order_[pos_++];
    }

  private:
    void shuffle() {
        for (std::size_t k = order_.size(); k > 1; --k)
            std::swap(order_[k - 1], order_[rng_.uniform_int(k)]);
    }
    std::vector<std::size_t> order_;
    Rng rng_;
    std::size_t pos_ = 0;
};

struct Workspace {
    explicit Workspace(const VoxelField &f) : grads(f) {}
    PixelRender pixel;
    ParamGradients grads;
    std::vector<double> adjoint;
    double loss_tau = 0, loss_sc = 0;
};

}  // namespace

TrainResult train(const TrainingData &data, const RenderConfig &render, const TrainConfig &config,
                  const TrainCallbacks &callbacks) {
    const int g = config.grid;
    VoxelField field = init_field(data.meta.bounds, {g, g, g}, data.meta.channels,
                                  config.sigma_pre_init, config.radiance_pre_init, config.basis);
    return train(data, std::move(field), render, config, callbacks);
}

TrainResult train(const TrainingData &data, VoxelField field, const RenderConfig &render,
                  const TrainConfig &config, const TrainCallbacks &callbacks) {
    config.validate();
    const TimeAxis &axis = data.meta.time_axis;
    render.validate(axis);
    if (data.measured.empty())
        throw std::invalid_argument("train: no training views");
    if (field.channels() != data.meta.channels)
        throw std::invalid_argument("train: field channels do not match the dataset");
    const int h = data.meta.height, w = data.meta.width;
    const int n_bins = axis.n_bins();
    const std::size_t per_view = std::size_t(h) * w;

    PixelSampler sampler(per_view * data.measured.size(), config.seed);
    OptimizerState state = OptimizerState::for_field(field);
    const int chunks = chunk_count(std::size_t(config.batch_rays));
    std::vector<Workspace> ws;
    ws.reserve(chunks);
    for (int c = 0; c < chunks; ++c)
        ws.emplace_back(field);
    std::vector<std::size_t> batch(config.batch_rays);

    TrainResult result{field, {}, data.count_scale};
    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 0; it < config.total_iters; ++it) {
        for (auto &b : batch)
            b = sampler.next();
        parallel_chunks(batch.size(), [&](int chunk, std::size_t b, std::size_t e) {
            Workspace &wk = ws[chunk];
            wk.grads.zero();
            wk.loss_tau = wk.loss_sc = 0;
            std::vector<double> weights;
            for (std::size_t p = b; p < e; ++p) {
                const std::size_t view = batch[p] / per_view;
                const int i = int(batch[p] % per_view / w), j = int(batch[p] % per_view % w);
                render_pixel_into(field, data.cameras[view], j + 0.5, i + 0.5, render, axis,
                                  data.meta.impulse, wk.pixel);
                wk.adjoint.resize(wk.pixel.transient.size());
                wk.loss_tau += loss_tau_into(wk.pixel.transient, data.measured[view].pixel(i, j),
                                             wk.adjoint);
                CarvingLoss sc;
                if (config.lambda_sc > 0) {
                    weights.clear();
                    for (const auto &f : wk.pixel.footprint)
                        weights.push_back(f.weight);
                    std::span<const std::uint8_t> mask(
                        data.masks[view].data() + (std::size_t(i) * w + j) * n_bins, n_bins);
                    sc = loss_sc(std::span(wk.pixel.rays).first(weights.size()), weights, mask,
                                 axis, config.lambda_sc);
                    wk.loss_sc += sc.value;
                }
                render_pixel_backward(field, wk.pixel, wk.adjoint, axis, data.meta.impulse, render,
                                      sc.d_termination, wk.grads);
            }
        });
        double l_tau = 0, l_sc = 0;
        for (int c = 0; c < chunks; ++c) {
            l_tau += ws[c].loss_tau;
            l_sc += ws[c].loss_sc;
            if (c > 0)
                ws[0].grads.add(ws[c].grads);
        }
        const double lr = config.lr_at(it);
        if (!std::isfinite(l_tau) || !std::isfinite(l_sc))
            throw TrainingDiverged("training diverged at iteration " + std::to_string(it) +
                                   ": non-finite loss");
        optimizer_step(field, ws[0].grads, state, lr, config);

        const int done = it + 1;
        const bool last = done == config.total_iters;
        if ((config.log_every > 0 && done % config.log_every == 0) || last) {
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            IterationLog entry{done, l_tau, l_sc, lr, secs};
            result.log.push_back(entry);
            if (callbacks.on_log)
                callbacks.on_log(entry);
        }
        if (callbacks.on_checkpoint &&
            ((config.checkpoint_every > 0 && done % config.checkpoint_every == 0) || last))
            callbacks.on_checkpoint(done, field);
    }
    result.field = std::move(field);
    return result;
}

}  // namespace tnrf
