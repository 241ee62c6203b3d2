// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <tnrf/field.h>
#include <tnrf/renderer.h>
#include <tnrf/simulator.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tnrf {

struct LossValue {
    double value = 0;
    std::vector<double> adjoint;  // dLoss/d(rendered)
};

// sum |ln(measured + 1) - ln(rendered + 1)|, with subgradient sign(0) = 0.
LossValue loss_tau(std::span<const double> rendered, std::span<const double> measured);
// Value-only variant that writes the adjoint into `adjoint` (same length).
double loss_tau_into(std::span<const double> rendered, std::span<const double> measured,
                     std::span<double> adjoint);

// Per (pixel, bin): true where every channel of the count is strictly below
// `background_level`. Layout [H][W][bin].
std::vector<std::uint8_t> carving_mask(const TransientImage &measured, double background_level);
// Same for a single pixel (n_bins * channels values).
std::vector<std::uint8_t> carving_mask_pixel(std::span<const double> counts, int n_bins,
                                             int channels, double background_level);

struct CarvingLoss {
    double value = 0;
    std::vector<std::vector<double>> d_termination;  // per footprint ray, per sample
};

// sum over footprint rays s and samples k of w_s [bin(2 d_k / c) masked] T_k alpha_k.
CarvingLoss loss_sc(std::span<const RaySamples> rays, std::span<const double> weights,
                    std::span<const std::uint8_t> mask, const TimeAxis &axis,
                    double scale = 1.0);

struct LossTerms {
    double tau = 0;
    double sc = 0;
    double lambda_sc = 0;
    double total() const { return tau + lambda_sc * sc; }
};

double total_loss(const LossTerms &terms);

inline constexpr double kLambdaScSimulated = 1e-3;
inline constexpr double kLambdaScCaptured = 1e-2;

// Background estimate for data without recorded noise parameters: mean
// count over the bins preceding the earliest return in the view, times 3.
double estimate_background(const TransientImage &counts, const ImpulseResponse &impulse);

struct TrainConfig {
    double lambda_sc = kLambdaScSimulated;
    double learning_rate = 1e-3;
    double decay_gamma = 0.33;
    std::vector<double> milestone_fractions{0.40, 0.60, 0.72};
    int batch_rays = 512;
    int total_iters = 1000;
    std::optional<double> background_level;  // defaults to the dataset's B
    std::uint64_t seed = 0;
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

    // Field.
    int grid = 64;
    double sigma_pre_init = -2.302585092994046;
    double radiance_pre_init = -3.0;
    RadianceBasis basis = RadianceBasis::Isotropic;

    // Output cadence (0 disables).
    int log_every = 100;
    int checkpoint_every = 0;

    void validate() const;
    // Learning rate at a 0-based iteration.
    double lr_at(int iteration) const;
    std::vector<int> milestone_iterations() const;
};

// First/second moment estimates for every parameter grid.
struct OptimizerState {
    std::vector<double> m_sigma, v_sigma, m_radiance, v_radiance;
    std::int64_t step = 0;

    static OptimizerState for_field(const VoxelField &field);
};

// Bias-corrected moment update with learning rate `lr`; shapes must match.
void optimizer_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                    std::span<double> v, std::int64_t step, double lr, double beta1, double beta2,
                    double epsilon);
// Applies one step to every grid of the field; advances state.step.
void optimizer_step(VoxelField &field, const ParamGradients &grads, OptimizerState &state,
                    double lr, const TrainConfig &config);

struct IterationLog {
    int iteration;
    double loss_tau;
    double loss_sc;
    double lr;
    double wall_seconds;
};

struct TrainingData {
    DatasetMeta meta;
    std::vector<CameraModel> cameras;         // one per training view
    std::vector<TransientImage> measured;     // normalized counts
    std::vector<std::vector<std::uint8_t>> masks;  // carving masks
    double count_scale = 1.0;                 // raw counts = normalized * count_scale
    double background_level = 0;
};

// Selects the first `max_views` training views (all when <= 0), normalizes
// counts by the global maximum and builds carving masks.
TrainingData prepare_training_data(const Dataset &dataset, const TrainConfig &config,
                                   int max_views = 0);

struct TrainResult {
    VoxelField field;
    std::vector<IterationLog> log;
    double count_scale = 1.0;
};

class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct TrainCallbacks {
    std::function<void(const IterationLog &)> on_log;
    std::function<void(int iteration, const VoxelField &)> on_checkpoint;
};

// Mini-batch training: pixels sampled without replacement within an epoch
// over every (view, pixel) pair, one optimizer step per batch.
TrainResult train(const TrainingData &data, const RenderConfig &render, const TrainConfig &config,
                  const TrainCallbacks &callbacks = {});

// Same, starting from an existing field.
TrainResult train(const TrainingData &data, VoxelField field, const RenderConfig &render,
                  const TrainConfig &config, const TrainCallbacks &callbacks = {});

// Render settings matched to a dataset: step = half a bin, min
// distance 1% of the scene diagonal, footprint from the dataset, early ray
// termination at T < 1e-4.
RenderConfig default_render_config(const DatasetMeta &meta);

}  // namespace tnrf
