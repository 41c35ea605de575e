#pragma once

#include "cflift/matrix.hpp"

namespace cflift {

// Partial-pivot LU with an explicit singularity gate. Pivot magnitudes below
// `pivot_tol` abort with NumericError instead of returning garbage.
Eigen::PartialPivLU<Matrix> lu_factor(const Matrix& a, double pivot_tol = 1e-12);

// Solves A X = B. A square, B.rows() == A.rows().
Matrix linear_solve(const Matrix& a, const Matrix& b);

// Matrix exponential: Pade(13) with scaling by 2^s, s = ceil(log2(norm1(A))).
Matrix expm(const Matrix& a);

}  // namespace cflift
