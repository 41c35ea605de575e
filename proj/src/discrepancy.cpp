#include "cflift/discrepancy.hpp"

namespace cflift {

const char* mode_name(ModelMode m) {
    return m == ModelMode::perturbation ? "perturbation" : "direct";
}

ModelMode mode_from_name(const std::string& name) {
    if (name == "perturbation") return ModelMode::perturbation;
    if (name == "direct") return ModelMode::direct;
    throw std::invalid_argument("unknown mode: " + name);
}

void LossWeights::validate() const {
    if (!(beta1 >= 0.0 && beta2 >= 0.0 && beta3 >= 0.0) || !std::isfinite(beta1) ||
        !std::isfinite(beta2) || !std::isfinite(beta3)) {
        throw std::invalid_argument("LossWeights: betas must be finite and nonnegative");
    }
}

void DiscrepancyModel::validate() const {
    nominal.validate();
    theta.validate();
    net.validate();
    const Index n = nominal.nx();
    const Index m = nominal.nu();
    require_shape(nominal.C.isIdentity(0.0) && nominal.D.norm() == 0.0,
                  "DiscrepancyModel: nominal must be (A_P, B_P, I, 0)");
    require_shape(gain.rows() == n && gain.cols() == n,
                  "DiscrepancyModel: gain is " + shape_str(gain));
    require_shape(net.input_dim() == n, "DiscrepancyModel: lifting input dim mismatch");
    require_shape(net.output_dim() == theta.dims.n_x,
                  "DiscrepancyModel: lifting output dim vs theta state dim");
    require_shape(theta.dims.n_u == m + n && theta.dims.n_y == n,
                  "DiscrepancyModel: theta dims must be (N, m+n, n)");
    require_shape(trim_x.size() == n && trim_u.size() == m, "DiscrepancyModel: trim dims");
    if (x_scale.size() > 0 || u_scale.size() > 0) {
        require_shape(x_scale.size() == n && u_scale.size() == m,
                      "DiscrepancyModel: scale dims");
        require_shape(x_scale.minCoeff() > 0.0 && u_scale.minCoeff() > 0.0,
                      "DiscrepancyModel: scales must be positive");
    }
}

Vector lift(const LiftingNet& net, const Vector& x) {
    return net.forward(x);
}

CoprimeFactorization nominal_lcf(const DiscrepancyModel& model) {
    return left_coprime(model.nominal, model.gain);
}

namespace {

std::vector<Vector> columns_of(const Matrix& m) {
    std::vector<Vector> cols(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) {
        cols[static_cast<std::size_t>(j)] = m.col(j);
    }
    return cols;
}

Matrix scaled_states(const DiscrepancyModel& model, const Matrix& x) {
    return model.scaled() ? Matrix(model.x_scale.asDiagonal() * x) : x;
}

Matrix scaled_inputs(const DiscrepancyModel& model, const Matrix& u) {
    return model.scaled() ? Matrix(model.u_scale.asDiagonal() * u) : u;
}

}  // namespace

void fill_residuals(const DiscrepancyModel& model, Dataset& ds) {
    ds.validate();
    const CoprimeFactorization cf = nominal_lcf(model);
    for (Trajectory& traj : ds.trajectories) {
        const Matrix xs = scaled_states(model, traj.x);
        const Matrix us = scaled_inputs(model, traj.u);
        const std::vector<Vector> r =
            residual_rollout(cf, columns_of(us), columns_of(xs), xs.col(0));
        traj.r.resize(xs.rows(), xs.cols());
        for (Index k = 0; k < traj.r.cols(); ++k) {
            traj.r.col(k) = r[static_cast<std::size_t>(k)];
        }
    }
}

namespace {

RolloutResult rollout_impl(const DiscrepancyModel& model, const Matrix& u_seq,
                           const Matrix& x_seq, bool negate_output) {
    model.validate();
    require_shape(u_seq.cols() == x_seq.cols(), "rollout: (u, x) lengths disagree");
    require_shape(x_seq.rows() == model.plant_dim() && u_seq.rows() == model.input_dim(),
                  "rollout: sample dims disagree with model");
    const Matrix xs = scaled_states(model, x_seq);
    const Matrix us = scaled_inputs(model, u_seq);
    const RealizedSystem rs = realize(model.theta);
    const Index total = xs.cols();
    const Index n = model.plant_dim();
    const Index m = model.input_dim();

    RolloutResult res;
    res.z.resize(model.lifted_dim(), total);
    res.out.resize(n, total);
    Vector z = lift(model.net, xs.col(0));
    for (Index k = 0; k < total; ++k) {
        res.z.col(k) = z;
        res.out.col(k) = negate_output ? Vector(-(rs.C * z)) : Vector(rs.C * z);
        if (k + 1 < total) {
            Vector ut(m + n);
            ut << us.col(k), xs.col(k);
            z = rs.A * z + rs.B * ut;
        }
    }
    return res;
}

}  // namespace

RolloutResult perturbation_rollout(const DiscrepancyModel& model, const Matrix& u_seq,
                                   const Matrix& x_seq) {
    require_shape(model.mode == ModelMode::perturbation, "perturbation_rollout: wrong mode");
    return rollout_impl(model, u_seq, x_seq, /*negate_output=*/false);
}

RolloutResult direct_rollout(const DiscrepancyModel& model, const Matrix& u_seq,
                             const Matrix& x_seq) {
    require_shape(model.mode == ModelMode::direct, "direct_rollout: wrong mode");
    return rollout_impl(model, u_seq, x_seq, /*negate_output=*/true);
}

StateSpace assemble_G(const DiscrepancyModel& model) {
    model.validate();
    require_shape(model.mode == ModelMode::perturbation, "assemble_G: wrong mode");
    const RealizedSystem rs = realize(model.theta);
    const Index n = model.plant_dim();
    const Index m = model.input_dim();
    const Index nl = model.lifted_dim();
    const Matrix b1 = rs.B.leftCols(m);
    const Matrix b2 = rs.B.rightCols(n);

    StateSpace g;
    g.A.resize(n + nl, n + nl);
    g.A.topLeftCorner(n, n) = model.nominal.A;
    g.A.topRightCorner(n, nl) = model.gain * rs.C;
    g.A.bottomLeftCorner(nl, n) = -b2;
    g.A.bottomRightCorner(nl, nl) = rs.A + b2 * rs.C;
    g.B.resize(n + nl, m);
    g.B.topRows(n) = model.nominal.B;
    g.B.bottomRows(nl) = -b1;
    g.C.resize(n, n + nl);
    g.C.leftCols(n) = Matrix::Identity(n, n);
    g.C.rightCols(nl) = -rs.C;
    g.D = Matrix::Zero(n, m);
    g.dt = model.nominal.dt;
    g.validate();
    return g;
}

StateSpace recover_G_direct(const DiscrepancyModel& model) {
    model.validate();
    require_shape(model.mode == ModelMode::direct, "recover_G_direct: wrong mode");
    const RealizedSystem rs = realize(model.theta);
    const Index n = model.plant_dim();
    const Index m = model.input_dim();
    const Matrix b1 = rs.B.leftCols(m);
    const Matrix b2 = rs.B.rightCols(n);

    StateSpace g;
    g.A = rs.A - b2 * rs.C;
    g.B = -b1;
    g.C = rs.C;
    g.D = Matrix::Zero(n, m);
    g.dt = model.nominal.dt;
    g.validate();
    return g;
}

StateSpace recovered_model(const DiscrepancyModel& model) {
    return model.mode == ModelMode::perturbation ? assemble_G(model) : recover_G_direct(model);
}

Vector initial_state(const DiscrepancyModel& model, const Vector& x0) {
    const Vector xs = model.scaled() ? Vector(model.x_scale.asDiagonal() * x0) : x0;
    const Vector psi = lift(model.net, xs);
    if (model.mode == ModelMode::direct) {
        return -psi;
    }
    Vector z0(xs.size() + psi.size());
    z0 << xs, -psi;
    return z0;
}

CoprimeFactorization model_lcf(const DiscrepancyModel& model) {
    const RealizedSystem rs = realize(model.theta);
    const Matrix b2 = rs.B.rightCols(model.plant_dim());
    if (model.mode == ModelMode::direct) {
        return left_coprime(recover_G_direct(model), b2);
    }
    Matrix gain(model.plant_dim() + model.lifted_dim(), model.plant_dim());
    gain.topRows(model.plant_dim()) = model.gain;
    gain.bottomRows(model.lifted_dim()) = b2;
    return left_coprime(assemble_G(model), gain);
}

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& idx, Index horizon,
                 ModelMode mode, const DiscrepancyModel& model) {
    require_shape(!idx.empty(), "make_batch: empty trajectory selection");
    const Index full = ds.horizon();
    const Index t = horizon > 0 ? horizon : full;
    require_shape(t >= 1 && t <= full, "make_batch: horizon " + std::to_string(t) +
                                           " exceeds trajectory length " + std::to_string(full));
    const Index n = ds.state_dim();
    const Index m = ds.input_dim();
    const auto count = static_cast<Index>(idx.size());

    Batch b;
    b.count = count;
    b.horizon = t;
    b.x_all.resize(n, count * (t + 1));
    b.u_all.resize(m, count * (t + 1));
    if (mode == ModelMode::perturbation) {
        require_shape(ds.has_residuals(), "make_batch: residuals not precomputed");
        b.r_all.resize(n, count * (t + 1));
    }
    for (Index k = 0; k <= t; ++k) {
        for (Index j = 0; j < count; ++j) {
            const Trajectory& traj = ds.trajectories[idx[static_cast<std::size_t>(j)]];
            b.x_all.col(k * count + j) = traj.x.col(k);
            b.u_all.col(k * count + j) = traj.u.col(k);
            if (mode == ModelMode::perturbation) {
                b.r_all.col(k * count + j) = traj.r.col(k);
            }
        }
    }
    b.x_all = scaled_states(model, b.x_all);
    b.u_all = scaled_inputs(model, b.u_all);
    return b;
}

ModelNodes model_on_tape(Tape& tape, const DiscrepancyModel& model) {
    model.validate();
    ModelNodes nodes;
    nodes.net = net_on_tape(tape, model.net);
    nodes.theta = theta_on_tape(tape, model.theta);
    return nodes;
}

LossNodes build_loss(Tape& tape, const ModelNodes& nodes, const DiscrepancyModel& model,
                     const Batch& batch, const LossWeights& weights, bool stop_gradient_dyn) {
    weights.validate();
    const Index n = model.plant_dim();
    const Index m = model.input_dim();
    const Index nl = model.lifted_dim();
    const Index count = batch.count;
    const Index t = batch.horizon;
    require_shape(count >= 1 && t >= 1, "build_loss: empty batch");
    require_shape(batch.x_all.cols() == count * (t + 1), "build_loss: batch layout broken");

    const RealizedNodes rn = realize(tape, nodes.theta, model.theta.dims, model.theta.epsilon);

    Matrix utilde(m + n, batch.u_all.cols());
    utilde.topRows(m) = batch.u_all;
    utilde.bottomRows(n) = batch.x_all;
    const NodeRef utilde_c = tape.constant(std::move(utilde));
    const NodeRef x_c = tape.constant(batch.x_all);

    NodeRef z0;
    NodeRef dyn_target;
    if (stop_gradient_dyn) {
        z0 = net_forward(tape, nodes.net, model.net.act, tape.slice(x_c, 0, 0, n, count));
        dyn_target = tape.constant(model.net.forward(batch.x_all.middleCols(count, count * t)));
    } else {
        const NodeRef psi_all = net_forward(tape, nodes.net, model.net.act, x_c);
        z0 = tape.slice(psi_all, 0, 0, nl, count);
        dyn_target = tape.slice(psi_all, 0, count, nl, count * t);
    }

    std::vector<NodeRef> zs;
    zs.reserve(static_cast<std::size_t>(t + 1));
    NodeRef z = z0;
    zs.push_back(z);
    for (Index k = 0; k < t; ++k) {
        const NodeRef uk = tape.slice(utilde_c, 0, k * count, m + n, count);
        z = tape.add(tape.matmul(rn.A, z), tape.matmul(rn.B, uk));
        zs.push_back(z);
    }
    const NodeRef z_roll = tape.concat_cols(zs);
    const NodeRef c_z = tape.matmul(rn.C, z_roll);

    NodeRef pred;
    if (model.mode == ModelMode::perturbation) {
        pred = tape.mse(tape.sub(c_z, tape.constant(batch.r_all)));
    } else {
        pred = tape.mse(tape.sub(tape.negate(c_z), x_c));
    }
    const NodeRef z_dyn = tape.slice(z_roll, 0, count, nl, count * t);
    const NodeRef dyn = tape.mse(tape.sub(z_dyn, dyn_target));
    const NodeRef d_frob = tape.frobenius(rn.D);

    const NodeRef total =
        tape.add(tape.add(pred, tape.scale(tape.scalar_constant(weights.beta1), dyn)),
                 tape.add(tape.scale(tape.scalar_constant(weights.beta2), rn.gamma),
                          tape.scale(tape.scalar_constant(weights.beta3), d_frob)));
    return {total, pred, dyn, rn.gamma, d_frob};
}

LossMetrics eval_loss(const DiscrepancyModel& model, const Dataset& ds,
                      const std::vector<std::size_t>& idx, const LossWeights& weights,
                      Index horizon, Index chunk) {
    require_shape(!idx.empty(), "eval_loss: empty trajectory selection");
    require_shape(chunk >= 1, "eval_loss: chunk must be positive");
    LossMetrics acc;
    std::size_t done = 0;
    while (done < idx.size()) {
        const std::size_t take = std::min(static_cast<std::size_t>(chunk), idx.size() - done);
        const std::vector<std::size_t> part(idx.begin() + static_cast<std::ptrdiff_t>(done),
                                            idx.begin() + static_cast<std::ptrdiff_t>(done + take));
        const Batch batch = make_batch(ds, part, horizon, model.mode, model);
        Tape tape;
        ModelNodes nodes;
        for (const Matrix& w : model.net.weights) {
            nodes.net.push_back(tape.constant(w));
        }
        NormBoundedTheta th = model.theta;
        nodes.theta.d = tape.constant(th.d);
        nodes.theta.V = tape.constant(th.V);
        nodes.theta.X = tape.constant(th.X);
        nodes.theta.Y = tape.constant(th.Y);
        nodes.theta.Z = tape.constant(th.Z);
        Matrix a(1, 1);
        a(0, 0) = th.alpha;
        nodes.theta.alpha = tape.constant(a);
        const LossNodes loss = build_loss(tape, nodes, model, batch, weights, false);
        const double w = static_cast<double>(take) / static_cast<double>(idx.size());
        acc.pred += w * tape.scalar(loss.pred);
        acc.dyn += w * tape.scalar(loss.dyn);
        acc.gamma = tape.scalar(loss.gamma);
        acc.d_frob = tape.scalar(loss.d_frob);
        done += take;
    }
    acc.total = acc.pred + weights.beta1 * acc.dyn + weights.beta2 * acc.gamma +
                weights.beta3 * acc.d_frob;
    return acc;
}

}  // namespace cflift
