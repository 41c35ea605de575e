#include "cflift/state_space.hpp"

#include "cflift/numkernel.hpp"

namespace cflift {

StateSpace StateSpace::from_dynamics(Matrix a, Matrix b, double dt) {
    StateSpace ss;
    const Index n = a.rows();
    ss.C = Matrix::Identity(n, n);
    ss.D = Matrix::Zero(n, b.cols());
    ss.A = std::move(a);
    ss.B = std::move(b);
    ss.dt = dt;
    ss.validate();
    return ss;
}

void StateSpace::validate() const {
    require_shape(A.rows() == A.cols(), "StateSpace: A not square, " + shape_str(A));
    require_shape(B.rows() == A.rows(), "StateSpace: B rows " + shape_str(B) + " vs A " + shape_str(A));
    require_shape(C.cols() == A.rows(), "StateSpace: C cols " + shape_str(C) + " vs A " + shape_str(A));
    require_shape(D.rows() == C.rows() && D.cols() == B.cols(),
                  "StateSpace: D is " + shape_str(D) + ", expected " + std::to_string(C.rows()) +
                      "x" + std::to_string(B.cols()));
    require_finite(A, "StateSpace::A");
    require_finite(B, "StateSpace::B");
    require_finite(C, "StateSpace::C");
    require_finite(D, "StateSpace::D");
}

SimResult simulate(const StateSpace& ss, const Vector& x0, const std::vector<Vector>& u_seq) {
    ss.validate();
    require_shape(ss.dt > 0.0, "simulate: system not discretized (dt == 0)");
    require_shape(x0.size() == ss.nx(), "simulate: x0 length " + std::to_string(x0.size()) +
                                            " vs state dim " + std::to_string(ss.nx()));
    require_shape(!u_seq.empty(), "simulate: empty input sequence");
    for (const Vector& u : u_seq) {
        require_shape(u.size() == ss.nu(), "simulate: input length " + std::to_string(u.size()) +
                                               " vs input dim " + std::to_string(ss.nu()));
    }

    const std::size_t steps = u_seq.size();
    SimResult res;
    res.states.reserve(steps);
    res.outputs.reserve(steps);
    Vector x = x0;
    for (std::size_t k = 0; k < steps; ++k) {
        res.states.push_back(x);
        res.outputs.push_back(ss.C * x + ss.D * u_seq[k]);
        if (k + 1 < steps) {
            x = ss.A * x + ss.B * u_seq[k];
        }
    }
    return res;
}

std::pair<Matrix, Matrix> zoh_discretize(const Matrix& ac, const Matrix& bc, double dt) {
    require_shape(dt > 0.0, "zoh_discretize: dt must be positive");
    require_shape(ac.rows() == ac.cols(), "zoh_discretize: Ac not square");
    require_shape(bc.rows() == ac.rows(), "zoh_discretize: Bc rows disagree with Ac");
    const Index n = ac.rows();
    const Index m = bc.cols();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = ac * dt;
    aug.topRightCorner(n, m) = bc * dt;
    const Matrix e = expm(aug);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace cflift
