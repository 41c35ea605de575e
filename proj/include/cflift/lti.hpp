#pragma once

#include <utility>
#include <vector>

#include "cflift/state_space.hpp"

namespace cflift {

// Discrete LQR gain via fixed-point iteration on the Riccati equation.
// Terminates when the iterate moves less than `tol` in Frobenius norm.
Matrix dlqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
            double tol = 1e-10, int max_iter = 10000);

// Output-injection gain L with rho(A + L C) < 1, by LQR duality.
Matrix observer_gain(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R);

// Stacked realization of [-N~  M~]: maps (u, x) to the residual r.
struct CoprimeFactorization {
    StateSpace realization;  // (A + L C, [-B, L], C, [0, I])
    Matrix gain;             // L
};

CoprimeFactorization left_coprime(const StateSpace& ss, const Matrix& L);

// Runs the factorization over a recorded (u, x) trajectory. z0 is the initial
// state of the factored system; the factorization starts at -z0.
std::vector<Vector> residual_rollout(const CoprimeFactorization& cf,
                                     const std::vector<Vector>& u_seq,
                                     const std::vector<Vector>& x_seq, const Vector& z0);

// Peak gain over frequency: coarse grid then golden-section refinement around
// the grid peak. Requires rho(A) < 1.
double hinf_norm(const StateSpace& ss, double tol = 1e-6, int grid_points = 2048);

// (operator 2-norm, Frobenius norm); the former via power iteration on D^T D.
std::pair<double, double> matrix_norms(const Matrix& D);

double spectral_radius(const Matrix& A);

}  // namespace cflift
