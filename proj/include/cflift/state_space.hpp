#pragma once

#include <utility>
#include <vector>

#include "cflift/matrix.hpp"

namespace cflift {

// Dense discrete-time realization. dt == 0 marks a continuous-time pair that
// still awaits discretization.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;
    double dt = 0.0;

    Index nx() const { return A.rows(); }
    Index nu() const { return B.cols(); }
    Index ny() const { return C.rows(); }

    // (A, B) with full-state output: C = I, D = 0.
    static StateSpace from_dynamics(Matrix a, Matrix b, double dt);

    void validate() const;
};

struct SimResult {
    std::vector<Vector> states;   // length T+1, includes x0
    std::vector<Vector> outputs;  // length T+1, y(k) = C x(k) + D u(k)
};

SimResult simulate(const StateSpace& ss, const Vector& x0, const std::vector<Vector>& u_seq);

// Exact sampling under zero-order hold: exp([[Ac, Bc], [0, 0]] dt).
std::pair<Matrix, Matrix> zoh_discretize(const Matrix& ac, const Matrix& bc, double dt);

}  // namespace cflift
