#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cflift {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Numerical failures (singular solves, non-convergence, NaN aborts).
// Distinct from std::invalid_argument, which flags bad shapes/config.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File-level failures (missing files, checksum/version mismatch).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) {
        throw NumericError(what + ": non-finite entries");
    }
}

inline void require_shape(bool ok, const std::string& msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace cflift
