#pragma once

#include <optional>

#include "cflift/dataset.hpp"
#include "cflift/lifting_net.hpp"
#include "cflift/lti.hpp"
#include "cflift/norm_bounded.hpp"

namespace cflift {

enum class ModelMode { perturbation, direct };

const char* mode_name(ModelMode m);
ModelMode mode_from_name(const std::string& name);

struct LossWeights {
    double beta1 = 0.1;
    double beta2 = 1e-5;
    double beta3 = 1e-5;

    void validate() const;
};

// Everything needed to rebuild the improved model G: the nominal pair, its
// stabilizing gain, the norm-bounded perturbation parameters, the lifting
// network, and the trim the data was shifted by.
struct DiscrepancyModel {
    ModelMode mode = ModelMode::perturbation;
    StateSpace nominal;  // (A_P, B_P, I, 0, dt)
    Matrix gain;         // L_P
    NormBoundedTheta theta;
    LiftingNet net;
    Vector trim_x;
    Vector trim_u;
    // Optional per-channel scaling (identity when empty); data enters the
    // model as diag(x_scale) x, diag(u_scale) u.
    Vector x_scale;
    Vector u_scale;

    Index plant_dim() const { return nominal.nx(); }
    Index input_dim() const { return nominal.nu(); }
    Index lifted_dim() const { return theta.dims.n_x; }
    bool scaled() const { return x_scale.size() > 0; }

    void validate() const;
};

Vector lift(const LiftingNet& net, const Vector& x);

CoprimeFactorization nominal_lcf(const DiscrepancyModel& model);

// Fills trajectory residual targets by running the nominal factorization
// over each recorded (u, x).
void fill_residuals(const DiscrepancyModel& model, Dataset& ds);

struct RolloutResult {
    Matrix z;    // N x (T+1) lifted perturbation states
    Matrix out;  // n x (T+1): r-hat (perturbation mode) or x-hat (direct mode)
};

RolloutResult perturbation_rollout(const DiscrepancyModel& model, const Matrix& u_seq,
                                   const Matrix& x_seq);
RolloutResult direct_rollout(const DiscrepancyModel& model, const Matrix& u_seq,
                             const Matrix& x_seq);

// Improved model: perturbation mode composes the nominal factors with the
// learned perturbation (state dim n + N); direct mode recovers G from the
// learned factorization alone (state dim N).
StateSpace assemble_G(const DiscrepancyModel& model);
StateSpace recover_G_direct(const DiscrepancyModel& model);
StateSpace recovered_model(const DiscrepancyModel& model);

// G's initial state for plant state x0: [x0; -Psi(x0)] or -Psi(x0).
Vector initial_state(const DiscrepancyModel& model, const Vector& x0);

// Left coprime factorization of the recovered model, gain [L_P; B_theta2]
// (perturbation) or B_theta2 (direct).
CoprimeFactorization model_lcf(const DiscrepancyModel& model);

// --- batched loss -----------------------------------------------------------

// Trajectories stacked column-wise, k-major: column k*count + j holds step k
// of trajectory j. All trajectories in a batch share the horizon.
struct Batch {
    Matrix x_all;  // n x (count*(T+1))
    Matrix u_all;  // m x (count*(T+1))
    Matrix r_all;  // n x (count*(T+1)), perturbation mode only
    Index count = 0;
    Index horizon = 0;
};

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& idx, Index horizon,
                 ModelMode mode, const DiscrepancyModel& model);

struct ModelNodes {
    std::vector<NodeRef> net;
    ThetaNodes theta;
};

ModelNodes model_on_tape(Tape& tape, const DiscrepancyModel& model);

struct LossNodes {
    NodeRef total, pred, dyn, gamma, d_frob;
};

LossNodes build_loss(Tape& tape, const ModelNodes& nodes, const DiscrepancyModel& model,
                     const Batch& batch, const LossWeights& weights, bool stop_gradient_dyn);

struct LossMetrics {
    double total = 0.0;
    double pred = 0.0;
    double dyn = 0.0;
    double gamma = 0.0;
    double d_frob = 0.0;
};

// Forward-only loss over the given trajectories, evaluated in chunks.
LossMetrics eval_loss(const DiscrepancyModel& model, const Dataset& ds,
                      const std::vector<std::size_t>& idx, const LossWeights& weights,
                      Index horizon, Index chunk = 256);

}  // namespace cflift
