#pragma once

#include <functional>

#include "cflift/adam.hpp"
#include "cflift/discrepancy.hpp"

namespace cflift {

struct TrainConfig {
    int epochs = 300;
    int batch_size = 64;
    Index horizon = 0;  // 0 = full trajectory length
    LossWeights weights;
    double learning_rate = 1e-3;
    double grad_clip = 10.0;
    std::uint64_t seed = 0;
    double validation_split = 0.2;
    int workers = 1;
    bool stop_gradient_dyn = false;
    int checkpoint_every = 50;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_pred = 0.0;
    double train_dyn = 0.0;
    double val_pred = 0.0;
    double val_dyn = 0.0;
    double gamma = 0.0;
    double d_frob = 0.0;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Deterministic by-trajectory split: shuffle with the config seed, first
// (1 - split) fraction trains.
Split split_dataset(std::size_t count, double validation_split, std::uint64_t seed);

struct TrainResult {
    DiscrepancyModel best;
    int best_epoch = -1;
    double best_val_pred = 0.0;
    std::vector<EpochStats> history;
};

// Per-epoch hook: (stats, current model); used for checkpoint cadence.
using EpochCallback = std::function<void(const EpochStats&, const DiscrepancyModel&)>;

// Trainable parameters in a fixed order: net weights, then d, V, X, Y, Z,
// alpha (1x1).
std::vector<Matrix> model_params(const DiscrepancyModel& model);
void set_model_params(DiscrepancyModel& model, const std::vector<Matrix>& params);

TrainResult train(DiscrepancyModel model, const Dataset& ds, const TrainConfig& cfg,
                  const EpochCallback& callback = {});

struct EvalMetrics {
    double train_pred = 0.0;
    double train_dyn = 0.0;
    double val_pred = 0.0;
    double val_dyn = 0.0;
    double gamma = 0.0;
    double d_frob = 0.0;
    double d_op2 = 0.0;
    double hinf = 0.0;       // measured norm of the stripped perturbation system
    double audit_bound = 0.0;  // gamma + ||D||_2
};

EvalMetrics evaluate(const DiscrepancyModel& model, const Dataset& ds, const Split& split,
                     const LossWeights& weights, Index horizon = 0);

}  // namespace cflift
