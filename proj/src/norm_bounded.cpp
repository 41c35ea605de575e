#include "cflift/norm_bounded.hpp"

namespace cflift {

void NormBoundedTheta::validate() const {
    require_shape(epsilon > 0.0, "NormBoundedTheta: epsilon must be positive");
    require_shape(dims.n_x >= 1 && dims.n_u >= 1 && dims.n_y >= 1,
                  "NormBoundedTheta: dims must be positive");
    const Index nb = dims.nbar();
    const Index nt = dims.ntil();
    require_shape(d.rows() == dims.n_x && d.cols() == 1, "NormBoundedTheta: d is " + shape_str(d));
    require_shape(V.rows() == dims.n_x && V.cols() == dims.n_x,
                  "NormBoundedTheta: V is " + shape_str(V));
    require_shape(X.rows() == nb && X.cols() == nb, "NormBoundedTheta: X is " + shape_str(X));
    require_shape(Y.rows() == nb && Y.cols() == nb, "NormBoundedTheta: Y is " + shape_str(Y));
    require_shape(Z.rows() == nt && Z.cols() == nb, "NormBoundedTheta: Z is " + shape_str(Z));
    require_finite(d, "theta.d");
    require_finite(V, "theta.V");
    require_finite(X, "theta.X");
    require_finite(Y, "theta.Y");
    require_finite(Z, "theta.Z");
    if (!std::isfinite(alpha)) {
        throw NumericError("NormBoundedTheta: alpha non-finite");
    }
}

NormBoundedTheta NormBoundedTheta::zeros(ThetaDims dims, double epsilon) {
    NormBoundedTheta t;
    t.dims = dims;
    t.epsilon = epsilon;
    t.d = Matrix::Zero(dims.n_x, 1);
    t.V = Matrix::Zero(dims.n_x, dims.n_x);
    t.X = Matrix::Zero(dims.nbar(), dims.nbar());
    t.Y = Matrix::Zero(dims.nbar(), dims.nbar());
    t.Z = Matrix::Zero(dims.ntil(), dims.nbar());
    t.alpha = 0.0;
    t.validate();
    return t;
}

NormBoundedTheta NormBoundedTheta::random(ThetaDims dims, double epsilon, double stddev,
                                          std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    auto fill = [&](Matrix& m) {
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                m(i, j) = dist(rng);
            }
        }
    };
    NormBoundedTheta t = zeros(dims, epsilon);
    fill(t.d);
    fill(t.V);
    fill(t.X);
    fill(t.Y);
    fill(t.Z);
    t.alpha = 0.0;
    return t;
}

ThetaNodes theta_on_tape(Tape& tape, const NormBoundedTheta& theta) {
    theta.validate();
    ThetaNodes n;
    n.d = tape.parameter(theta.d);
    n.V = tape.parameter(theta.V);
    n.X = tape.parameter(theta.X);
    n.Y = tape.parameter(theta.Y);
    n.Z = tape.parameter(theta.Z);
    Matrix a(1, 1);
    a(0, 0) = theta.alpha;
    n.alpha = tape.parameter(a);
    return n;
}

namespace {

// diag(v) assembled within the op set: row i is v_i * e_i^T.
NodeRef diag_from_column(Tape& tape, NodeRef v) {
    const Index n = tape.value(v).rows();
    std::vector<NodeRef> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        Matrix basis = Matrix::Zero(1, n);
        basis(0, i) = 1.0;
        rows.push_back(tape.scale(tape.slice(v, i, 0, 1, 1), tape.constant(basis)));
    }
    return tape.concat_rows(rows);
}

}  // namespace

RealizedNodes realize(Tape& tape, const ThetaNodes& nodes, const ThetaDims& dims, double epsilon) {
    const Index nx = dims.n_x;
    const Index nu = dims.n_u;
    const Index ny = dims.n_y;
    const Index nb = dims.nbar();
    const Index nt = dims.ntil();
    require_shape(epsilon > 0.0, "realize: epsilon must be positive");

    // Lambda = diag(e^{d_i}); d clamped to +-30 before exponentiation.
    const NodeRef d_safe = tape.activation(nodes.d, Activation::clamp);
    const NodeRef lam_pos = diag_from_column(tape, tape.exp_elem(d_safe));
    const NodeRef lam_neg = diag_from_column(tape, tape.exp_elem(tape.negate(d_safe)));

    // Cayley: Q = (I - V + V^T)(I + V - V^T)^{-1}. The two factors are
    // transposes of each other, so Q^T solves numer * Q^T = denom.
    const NodeRef ident_nx = tape.constant(Matrix::Identity(nx, nx));
    const NodeRef skew = tape.sub(nodes.V, tape.transpose(nodes.V));
    const NodeRef numer = tape.sub(ident_nx, skew);
    const NodeRef denom = tape.add(ident_nx, skew);
    const NodeRef q = tape.transpose(tape.solve(numer, denom));

    // N = X^T X + Z^T Z + Y - Y^T + eps I.
    const NodeRef gram_x = tape.matmul(tape.transpose(nodes.X), nodes.X);
    const NodeRef gram_z = tape.matmul(tape.transpose(nodes.Z), nodes.Z);
    const NodeRef skew_y = tape.sub(nodes.Y, tape.transpose(nodes.Y));
    const NodeRef eps_ident = tape.constant(epsilon * Matrix::Identity(nb, nb));
    const NodeRef n_mat = tape.add(tape.add(gram_x, gram_z), tape.add(skew_y, eps_ident));

    const NodeRef ident_nb = tape.constant(Matrix::Identity(nb, nb));
    const NodeRef i_plus_n_t = tape.transpose(tape.add(ident_nb, n_mat));
    const NodeRef top = tape.transpose(tape.solve(i_plus_n_t, tape.transpose(tape.sub(ident_nb, n_mat))));

    NodeRef m_bar = top;
    if (nt > 0) {
        const NodeRef bot = tape.scale(tape.scalar_constant(-2.0),
                                       tape.transpose(tape.solve(i_plus_n_t, tape.transpose(nodes.Z))));
        m_bar = tape.concat_rows({top, bot});
    }
    const NodeRef m = (ny >= nu) ? m_bar : tape.transpose(m_bar);

    const NodeRef m11 = tape.slice(m, 0, 0, nx, nx);
    const NodeRef m12 = tape.slice(m, 0, nx, nx, nu);
    const NodeRef m21 = tape.slice(m, nx, 0, ny, nx);
    const NodeRef m22 = tape.slice(m, nx, nx, ny, nu);

    const NodeRef q_lam_inv = tape.matmul(q, lam_neg);
    const NodeRef lam_q_t = tape.matmul(lam_pos, tape.transpose(q));
    const NodeRef gamma = tape.exp_elem(nodes.alpha);

    RealizedNodes out;
    out.A = tape.matmul(tape.matmul(q_lam_inv, m11), lam_q_t);
    out.B = tape.scale(gamma, tape.matmul(q_lam_inv, m12));
    out.C = tape.matmul(m21, lam_q_t);
    out.D = tape.scale(gamma, m22);
    out.gamma = gamma;
    return out;
}

RealizedSystem realize(const NormBoundedTheta& theta) {
    Tape tape;
    const ThetaNodes nodes = theta_on_tape(tape, theta);
    const RealizedNodes rn = realize(tape, nodes, theta.dims, theta.epsilon);
    RealizedSystem rs;
    rs.A = tape.value(rn.A);
    rs.B = tape.value(rn.B);
    rs.C = tape.value(rn.C);
    rs.D = tape.value(rn.D);
    rs.gamma = tape.scalar(rn.gamma);
    return rs;
}

Matrix cayley(const Matrix& V) {
    require_shape(V.rows() == V.cols(), "cayley: V not square, " + shape_str(V));
    Tape tape;
    const NodeRef v = tape.constant(V);
    const NodeRef ident = tape.constant(Matrix::Identity(V.rows(), V.rows()));
    const NodeRef skew = tape.sub(v, tape.transpose(v));
    const NodeRef q = tape.transpose(tape.solve(tape.sub(ident, skew), tape.add(ident, skew)));
    return tape.value(q);
}

Matrix contraction_m(const Matrix& X, const Matrix& Y, const Matrix& Z, double epsilon,
                     const ThetaDims& dims) {
    NormBoundedTheta t = NormBoundedTheta::zeros(dims, epsilon);
    t.X = X;
    t.Y = Y;
    t.Z = Z;
    t.validate();
    Tape tape;
    const ThetaNodes nodes = theta_on_tape(tape, t);
    const Index nb = dims.nbar();
    const NodeRef gram_x = tape.matmul(tape.transpose(nodes.X), nodes.X);
    const NodeRef gram_z = tape.matmul(tape.transpose(nodes.Z), nodes.Z);
    const NodeRef skew_y = tape.sub(nodes.Y, tape.transpose(nodes.Y));
    const NodeRef eps_ident = tape.constant(epsilon * Matrix::Identity(nb, nb));
    const NodeRef n_mat = tape.add(tape.add(gram_x, gram_z), tape.add(skew_y, eps_ident));
    const NodeRef ident_nb = tape.constant(Matrix::Identity(nb, nb));
    const NodeRef i_plus_n_t = tape.transpose(tape.add(ident_nb, n_mat));
    const NodeRef top = tape.transpose(tape.solve(i_plus_n_t, tape.transpose(tape.sub(ident_nb, n_mat))));
    NodeRef m_bar = top;
    if (dims.ntil() > 0) {
        const NodeRef bot = tape.scale(tape.scalar_constant(-2.0),
                                       tape.transpose(tape.solve(i_plus_n_t, tape.transpose(nodes.Z))));
        m_bar = tape.concat_rows({top, bot});
    }
    const NodeRef m = (dims.n_y >= dims.n_u) ? m_bar : tape.transpose(m_bar);
    return tape.value(m);
}

StateSpace strip_feedthrough(const RealizedSystem& rs, double dt) {
    StateSpace ss;
    ss.A = rs.A;
    ss.B = rs.B;
    ss.C = rs.C;
    ss.D = Matrix::Zero(rs.C.rows(), rs.B.cols());
    ss.dt = dt;
    ss.validate();
    return ss;
}

}  // namespace cflift
