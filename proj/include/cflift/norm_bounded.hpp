#pragma once

#include <cstdint>
#include <random>

#include "cflift/state_space.hpp"
#include "cflift/tape.hpp"

namespace cflift {

struct ThetaDims {
    Index n_x = 0;
    Index n_u = 0;
    Index n_y = 0;

    Index nbar() const { return n_x + std::min(n_y, n_u); }
    Index ntil() const { return n_y >= n_u ? n_y - n_u : n_u - n_y; }

    bool operator==(const ThetaDims&) const = default;
};

// Free parameters realizing a stable LTI system with H-inf norm <= gamma,
// gamma = e^alpha. epsilon keeps the internal contraction strict.
struct NormBoundedTheta {
    ThetaDims dims;
    double epsilon = 1e-3;
    Matrix d;  // n_x x 1, log scaling exponents
    Matrix V;  // n_x x n_x
    Matrix X;  // nbar x nbar
    Matrix Y;  // nbar x nbar
    Matrix Z;  // ntil x nbar
    double alpha = 0.0;

    void validate() const;

    static NormBoundedTheta zeros(ThetaDims dims, double epsilon = 1e-3);
    static NormBoundedTheta random(ThetaDims dims, double epsilon, double stddev,
                                   std::mt19937_64& rng);
};

struct RealizedSystem {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;
    double gamma = 1.0;
};

// Tape-resident handles for the free parameters and the realized blocks.
struct ThetaNodes {
    NodeRef d, V, X, Y, Z, alpha;
};

struct RealizedNodes {
    NodeRef A, B, C, D, gamma;
};

ThetaNodes theta_on_tape(Tape& tape, const NormBoundedTheta& theta);
RealizedNodes realize(Tape& tape, const ThetaNodes& nodes, const ThetaDims& dims, double epsilon);

RealizedSystem realize(const NormBoundedTheta& theta);

// Q = (I - V + V^T)(I + V - V^T)^{-1}; orthogonal for any square V.
Matrix cayley(const Matrix& V);

// Stacked contraction [(I-N)(I+N)^{-1}; -2Z(I+N)^{-1}], transposed when
// n_y < n_u; sigma_max < 1 by construction.
Matrix contraction_m(const Matrix& X, const Matrix& Y, const Matrix& Z, double epsilon,
                     const ThetaDims& dims);

// Perturbation model uses (A, B, C) only; D stays with the realized system
// for the Frobenius penalty and the gamma + ||D||_2 audit bound.
StateSpace strip_feedthrough(const RealizedSystem& rs, double dt);

}  // namespace cflift
