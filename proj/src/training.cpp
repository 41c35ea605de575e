#include "cflift/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace cflift {

void TrainConfig::validate() const {
    weights.validate();
    require_shape(epochs >= 1, "TrainConfig: epochs must be >= 1");
    require_shape(batch_size >= 1, "TrainConfig: batch size must be >= 1");
    require_shape(validation_split > 0.0 && validation_split < 1.0,
                  "TrainConfig: validation split must lie in (0, 1)");
    require_shape(learning_rate > 0.0, "TrainConfig: learning rate must be positive");
    require_shape(workers >= 1, "TrainConfig: workers must be >= 1");
    require_shape(horizon >= 0, "TrainConfig: horizon must be nonnegative");
}

Split split_dataset(std::size_t count, double validation_split, std::uint64_t seed) {
    require_shape(count >= 2, "split_dataset: need at least two trajectories");
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) {
        idx[i] = i;
    }
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto val_count = static_cast<std::size_t>(
        std::llround(validation_split * static_cast<double>(count)));
    val_count = std::clamp<std::size_t>(val_count, 1, count - 1);
    Split sp;
    sp.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(val_count));
    sp.val.assign(idx.end() - static_cast<std::ptrdiff_t>(val_count), idx.end());
    return sp;
}

std::vector<Matrix> model_params(const DiscrepancyModel& model) {
    std::vector<Matrix> params;
    params.reserve(model.net.weights.size() + 6);
    for (const Matrix& w : model.net.weights) {
        params.push_back(w);
    }
    params.push_back(model.theta.d);
    params.push_back(model.theta.V);
    params.push_back(model.theta.X);
    params.push_back(model.theta.Y);
    params.push_back(model.theta.Z);
    Matrix a(1, 1);
    a(0, 0) = model.theta.alpha;
    params.push_back(std::move(a));
    return params;
}

void set_model_params(DiscrepancyModel& model, const std::vector<Matrix>& params) {
    require_shape(params.size() == model.net.weights.size() + 6,
                  "set_model_params: parameter count mismatch");
    std::size_t at = 0;
    for (Matrix& w : model.net.weights) {
        w = params[at++];
    }
    model.theta.d = params[at++];
    model.theta.V = params[at++];
    model.theta.X = params[at++];
    model.theta.Y = params[at++];
    model.theta.Z = params[at++];
    model.theta.alpha = params[at](0, 0);
}

namespace {

struct BatchResult {
    LossMetrics metrics;
    std::vector<Matrix> grads;
};

BatchResult run_chunk(const DiscrepancyModel& model, const Dataset& ds,
                      const std::vector<std::size_t>& idx, Index horizon,
                      const LossWeights& weights, bool stop_gradient_dyn) {
    const Batch batch = make_batch(ds, idx, horizon, model.mode, model);
    Tape tape;
    const ModelNodes nodes = model_on_tape(tape, model);
    const LossNodes loss = build_loss(tape, nodes, model, batch, weights, stop_gradient_dyn);
    BatchResult res;
    res.metrics.total = tape.scalar(loss.total);
    res.metrics.pred = tape.scalar(loss.pred);
    res.metrics.dyn = tape.scalar(loss.dyn);
    res.metrics.gamma = tape.scalar(loss.gamma);
    res.metrics.d_frob = tape.scalar(loss.d_frob);
    const Gradients grads = tape.backward(loss.total);
    res.grads.reserve(grads.size());
    for (const auto& [ref, g] : grads) {
        res.grads.push_back(g);  // map is keyed by leaf ref: creation order
    }
    return res;
}

// Splits a batch across workers; gradients and losses recombine in fixed
// chunk order, weighted by chunk size.
BatchResult batch_gradients(const DiscrepancyModel& model, const Dataset& ds,
                            const std::vector<std::size_t>& idx, Index horizon,
                            const LossWeights& weights, bool stop_gradient_dyn, int workers) {
    const int used = std::min<int>(workers, static_cast<int>(idx.size()));
    if (used <= 1) {
        return run_chunk(model, ds, idx, horizon, weights, stop_gradient_dyn);
    }
    std::vector<std::vector<std::size_t>> chunks(static_cast<std::size_t>(used));
    const std::size_t base = idx.size() / static_cast<std::size_t>(used);
    const std::size_t extra = idx.size() % static_cast<std::size_t>(used);
    std::size_t at = 0;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        const std::size_t take = base + (c < extra ? 1 : 0);
        chunks[c].assign(idx.begin() + static_cast<std::ptrdiff_t>(at),
                         idx.begin() + static_cast<std::ptrdiff_t>(at + take));
        at += take;
    }

    std::vector<BatchResult> results(chunks.size());
    std::vector<std::exception_ptr> errors(chunks.size());
    std::vector<std::thread> pool;
    pool.reserve(chunks.size());
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        pool.emplace_back([&, c] {
            try {
                results[c] = run_chunk(model, ds, chunks[c], horizon, weights, stop_gradient_dyn);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) {
        th.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    BatchResult combined;
    combined.metrics = results.front().metrics;
    combined.metrics.total = combined.metrics.pred = combined.metrics.dyn = 0.0;
    combined.grads.assign(results.front().grads.size(), Matrix());
    for (std::size_t p = 0; p < combined.grads.size(); ++p) {
        combined.grads[p] = Matrix::Zero(results.front().grads[p].rows(),
                                         results.front().grads[p].cols());
    }
    for (std::size_t c = 0; c < results.size(); ++c) {
        const double w =
            static_cast<double>(chunks[c].size()) / static_cast<double>(idx.size());
        combined.metrics.total += w * results[c].metrics.total;
        combined.metrics.pred += w * results[c].metrics.pred;
        combined.metrics.dyn += w * results[c].metrics.dyn;
        for (std::size_t p = 0; p < combined.grads.size(); ++p) {
            combined.grads[p] += w * results[c].grads[p];
        }
    }
    return combined;
}

std::string param_norm_snapshot(const std::vector<Matrix>& params) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < params.size(); ++i) {
        os << (i ? ", " : "") << params[i].norm();
    }
    os << "]";
    return os.str();
}

}  // namespace

TrainResult train(DiscrepancyModel model, const Dataset& ds, const TrainConfig& cfg,
                  const EpochCallback& callback) {
    cfg.validate();
    model.validate();
    ds.validate();
    if (model.mode == ModelMode::perturbation) {
        require_shape(ds.has_residuals(), "train: residuals not precomputed");
    }

    const Split sp = split_dataset(ds.trajectories.size(), cfg.validation_split, cfg.seed);
    const Index horizon = cfg.horizon > 0 ? cfg.horizon : ds.horizon();

    std::vector<Matrix> params = model_params(model);
    AdamState adam = AdamState::init(params, AdamConfig{.lr = cfg.learning_rate});
    std::mt19937_64 epoch_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    TrainResult result;
    result.best = model;
    result.best_val_pred = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order = sp.train;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), epoch_rng);
        double pred_acc = 0.0;
        double dyn_acc = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t take =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - at);
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(at),
                                               order.begin() + static_cast<std::ptrdiff_t>(at + take));
            BatchResult br;
            try {
                br = batch_gradients(model, ds, idx, horizon, cfg.weights, cfg.stop_gradient_dyn,
                                     cfg.workers);
            } catch (const NumericError& e) {
                throw NumericError("train: aborted at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + ": " + e.what() +
                                   "; parameter norms " + param_norm_snapshot(params));
            }
            if (!std::isfinite(br.metrics.total)) {
                throw NumericError("train: NaN loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index) +
                                   "; parameter norms " + param_norm_snapshot(params));
            }
            const double w = static_cast<double>(take) / static_cast<double>(order.size());
            pred_acc += w * br.metrics.pred;
            dyn_acc += w * br.metrics.dyn;
            clip_gradients(br.grads, cfg.grad_clip);
            adam_step(params, br.grads, adam);
            set_model_params(model, params);
            ++batch_index;
        }

        const LossMetrics val = eval_loss(model, ds, sp.val, cfg.weights, horizon);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_pred = pred_acc;
        stats.train_dyn = dyn_acc;
        stats.val_pred = val.pred;
        stats.val_dyn = val.dyn;
        stats.gamma = val.gamma;
        stats.d_frob = val.d_frob;
        result.history.push_back(stats);

        if (val.pred < result.best_val_pred) {
            result.best_val_pred = val.pred;
            result.best_epoch = epoch;
            result.best = model;
        }
        if (callback) {
            callback(stats, model);
        }
    }
    return result;
}

EvalMetrics evaluate(const DiscrepancyModel& model, const Dataset& ds, const Split& split,
                     const LossWeights& weights, Index horizon) {
    const LossMetrics train_m = eval_loss(model, ds, split.train, weights, horizon);
    const LossMetrics val_m = eval_loss(model, ds, split.val, weights, horizon);
    const RealizedSystem rs = realize(model.theta);
    const auto [op2, frob] = matrix_norms(rs.D);
    EvalMetrics out;
    out.train_pred = train_m.pred;
    out.train_dyn = train_m.dyn;
    out.val_pred = val_m.pred;
    out.val_dyn = val_m.dyn;
    out.gamma = rs.gamma;
    out.d_frob = frob;
    out.d_op2 = op2;
    out.hinf = hinf_norm(strip_feedthrough(rs, model.nominal.dt));
    out.audit_bound = rs.gamma + op2;
    return out;
}

}  // namespace cflift
