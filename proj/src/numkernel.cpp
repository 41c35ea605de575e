#include "cflift/numkernel.hpp"

#include <cmath>

namespace cflift {

Eigen::PartialPivLU<Matrix> lu_factor(const Matrix& a, double pivot_tol) {
    require_shape(a.rows() == a.cols(), "lu_factor: matrix not square, " + shape_str(a));
    Eigen::PartialPivLU<Matrix> lu(a);
    const auto diag = lu.matrixLU().diagonal();
    for (Index i = 0; i < diag.size(); ++i) {
        if (std::abs(diag(i)) < pivot_tol) {
            throw NumericError("linear-solve: singular or ill-conditioned matrix (pivot " +
                               std::to_string(std::abs(diag(i))) + " at " + std::to_string(i) + ")");
        }
    }
    return lu;
}

Matrix linear_solve(const Matrix& a, const Matrix& b) {
    require_shape(b.rows() == a.rows(),
                  "linear_solve: rhs rows " + shape_str(b) + " vs lhs " + shape_str(a));
    if (a.rows() == 0) {
        return Matrix(0, b.cols());
    }
    return lu_factor(a).solve(b);
}

namespace {

// Pade(13) coefficients, Higham's ordering b0..b13.
constexpr double kPade13[] = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

}  // namespace

Matrix expm(const Matrix& a) {
    require_shape(a.rows() == a.cols(), "expm: matrix not square, " + shape_str(a));
    const Index n = a.rows();
    if (n == 0) {
        return Matrix(0, 0);
    }
    require_finite(a, "expm");

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 1.0) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1)));
    }
    const Matrix as = a / std::pow(2.0, squarings);

    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix ident = Matrix::Identity(n, n);

    Matrix u = as * (a6 * (kPade13[13] * a6 + kPade13[11] * a4 + kPade13[9] * a2) +
                     kPade13[7] * a6 + kPade13[5] * a4 + kPade13[3] * a2 + kPade13[1] * ident);
    Matrix v = a6 * (kPade13[12] * a6 + kPade13[10] * a4 + kPade13[8] * a2) +
               kPade13[6] * a6 + kPade13[4] * a4 + kPade13[2] * a2 + kPade13[0] * ident;

    Matrix r = linear_solve(v - u, v + u);
    for (int i = 0; i < squarings; ++i) {
        r = r * r;
    }
    return r;
}

}  // namespace cflift
