#include "cflift/lti.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "cflift/numkernel.hpp"

namespace cflift {

Matrix dlqr(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, double tol,
            int max_iter) {
    const Index n = A.rows();
    const Index m = B.cols();
    require_shape(A.cols() == n && B.rows() == n, "dlqr: A/B shapes disagree");
    require_shape(Q.rows() == n && Q.cols() == n, "dlqr: Q is " + shape_str(Q));
    require_shape(R.rows() == m && R.cols() == m, "dlqr: R is " + shape_str(R));
    require_shape((Q - Q.transpose()).norm() <= 1e-10 * (1.0 + Q.norm()), "dlqr: Q not symmetric");
    require_shape((R - R.transpose()).norm() <= 1e-10 * (1.0 + R.norm()), "dlqr: R not symmetric");
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(R);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
            throw NumericError("dlqr: R is not positive definite");
        }
    }

    Matrix P = Q;
    for (int it = 0; it < max_iter; ++it) {
        const Matrix btp = B.transpose() * P;
        const Matrix gain = linear_solve(R + btp * B, btp * A);
        const Matrix next = Q + A.transpose() * P * (A - B * gain);
        const double delta = (next - P).norm();
        P = next;
        if (delta < tol) {
            return linear_solve(R + B.transpose() * P * B, B.transpose() * P * A);
        }
    }
    throw NumericError("dlqr: Riccati iteration did not converge within " +
                       std::to_string(max_iter) + " iterations");
}

Matrix observer_gain(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R) {
    const Matrix K = dlqr(A.transpose(), C.transpose(), Q, R);
    return -K.transpose();
}

CoprimeFactorization left_coprime(const StateSpace& ss, const Matrix& L) {
    ss.validate();
    require_shape(ss.D.norm() == 0.0, "left_coprime: plant must be strictly proper (D = 0)");
    require_shape(L.rows() == ss.nx() && L.cols() == ss.ny(),
                  "left_coprime: gain is " + shape_str(L) + ", expected " +
                      std::to_string(ss.nx()) + "x" + std::to_string(ss.ny()));

    const Matrix acl = ss.A + L * ss.C;
    const double rho = spectral_radius(acl);
    if (rho >= 1.0) {
        throw NumericError("left_coprime: A + L C has spectral radius " + std::to_string(rho));
    }

    const Index n = ss.nx();
    const Index m = ss.nu();
    const Index p = ss.ny();
    StateSpace fact;
    fact.A = acl;
    fact.B.resize(n, m + p);
    fact.B.leftCols(m) = -ss.B;
    fact.B.rightCols(p) = L;
    fact.C = ss.C;
    fact.D = Matrix::Zero(p, m + p);
    fact.D.rightCols(p) = Matrix::Identity(p, p);
    fact.dt = ss.dt;
    return {std::move(fact), L};
}

std::vector<Vector> residual_rollout(const CoprimeFactorization& cf,
                                     const std::vector<Vector>& u_seq,
                                     const std::vector<Vector>& x_seq, const Vector& z0) {
    require_shape(u_seq.size() == x_seq.size(), "residual_rollout: (u, x) lengths disagree");
    require_shape(!u_seq.empty(), "residual_rollout: empty trajectory");
    const Index m = cf.realization.nu() - cf.realization.ny();
    const Index p = cf.realization.ny();
    std::vector<Vector> stacked(u_seq.size());
    for (std::size_t k = 0; k < u_seq.size(); ++k) {
        require_shape(u_seq[k].size() == m && x_seq[k].size() == p,
                      "residual_rollout: sample dims disagree with factorization");
        Vector uk(m + p);
        uk << u_seq[k], x_seq[k];
        stacked[k] = std::move(uk);
    }
    return simulate(cf.realization, -z0, stacked).outputs;
}

namespace {

// sigma_max(C (e^{jw} I - A)^{-1} B + D) through a real 2n-augmented solve.
double frequency_gain(const StateSpace& ss, double omega) {
    const Index n = ss.nx();
    const Index m = ss.nu();
    const Index p = ss.ny();
    Matrix hr = ss.D;
    Matrix hi = Matrix::Zero(p, m);
    if (n > 0) {
        const double c = std::cos(omega);
        const double s = std::sin(omega);
        Matrix lhs(2 * n, 2 * n);
        lhs.topLeftCorner(n, n) = c * Matrix::Identity(n, n) - ss.A;
        lhs.topRightCorner(n, n) = -s * Matrix::Identity(n, n);
        lhs.bottomLeftCorner(n, n) = s * Matrix::Identity(n, n);
        lhs.bottomRightCorner(n, n) = c * Matrix::Identity(n, n) - ss.A;
        Matrix rhs = Matrix::Zero(2 * n, m);
        rhs.topRows(n) = ss.B;
        const Matrix sol = linear_solve(lhs, rhs);
        hr += ss.C * sol.topRows(n);
        hi = ss.C * sol.bottomRows(n);
    }
    // Real embedding of the complex response carries the same singular values.
    Matrix embed(2 * p, 2 * m);
    embed.topLeftCorner(p, m) = hr;
    embed.topRightCorner(p, m) = -hi;
    embed.bottomLeftCorner(p, m) = hi;
    embed.bottomRightCorner(p, m) = hr;
    Eigen::JacobiSVD<Matrix> svd(embed);
    return svd.singularValues()(0);
}

}  // namespace

double hinf_norm(const StateSpace& ss, double tol, int grid_points) {
    ss.validate();
    (void)tol;
    const double rho = spectral_radius(ss.A);
    if (rho >= 1.0) {
        throw NumericError("hinf_norm: system unstable, spectral radius " + std::to_string(rho));
    }
    require_shape(grid_points >= 2, "hinf_norm: grid too small");

    const double pi = std::acos(-1.0);
    std::vector<double> gains(static_cast<std::size_t>(grid_points));
    int peak = 0;
    for (int i = 0; i < grid_points; ++i) {
        const double w = pi * static_cast<double>(i) / static_cast<double>(grid_points - 1);
        gains[static_cast<std::size_t>(i)] = frequency_gain(ss, w);
        if (gains[static_cast<std::size_t>(i)] > gains[static_cast<std::size_t>(peak)]) {
            peak = i;
        }
    }

    double lo = pi * static_cast<double>(std::max(0, peak - 1)) / static_cast<double>(grid_points - 1);
    double hi = pi * static_cast<double>(std::min(grid_points - 1, peak + 1)) /
                static_cast<double>(grid_points - 1);
    double best = gains[static_cast<std::size_t>(peak)];

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = frequency_gain(ss, x1);
    double f2 = frequency_gain(ss, x2);
    while (b - a > 1e-8) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = frequency_gain(ss, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = frequency_gain(ss, x1);
        }
        best = std::max(best, std::max(f1, f2));
    }
    return best;
}

std::pair<double, double> matrix_norms(const Matrix& D) {
    const double frob = D.norm();
    if (D.size() == 0 || frob == 0.0) {
        return {0.0, frob};
    }
    const Matrix gram = D.transpose() * D;
    std::mt19937 rng(12345);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector v(gram.rows());
    for (Index i = 0; i < v.size(); ++i) {
        v(i) = dist(rng);
    }
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Vector w = gram * v;
        const double nw = w.norm();
        if (nw == 0.0) {
            return {0.0, frob};
        }
        v = w / nw;
        const double next = v.dot(gram * v);
        if (std::abs(next - lambda) < 1e-12 * std::max(1.0, next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return {std::sqrt(std::max(0.0, lambda)), frob};
}

double spectral_radius(const Matrix& A) {
    require_shape(A.rows() == A.cols(), "spectral_radius: matrix not square, " + shape_str(A));
    if (A.rows() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericError("spectral_radius: eigenvalue iteration did not converge");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace cflift
