#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cflift/matrix.hpp"

namespace cflift {

// One recorded trajectory, columns indexed by time step 0..T.
struct Trajectory {
    Matrix x;  // n x (T+1) states (deviation coordinates when trim is nonzero)
    Matrix u;  // m x (T+1) inputs
    Matrix r;  // n x (T+1) precomputed residual targets; empty until filled
    bool envelope_violation = false;
};

struct Dataset {
    std::string plant;
    double dt = 0.0;
    Vector trim_x;
    Vector trim_u;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<Trajectory> trajectories;

    Index state_dim() const { return trajectories.empty() ? 0 : trajectories.front().x.rows(); }
    Index input_dim() const { return trajectories.empty() ? 0 : trajectories.front().u.rows(); }
    Index horizon() const { return trajectories.empty() ? 0 : trajectories.front().x.cols() - 1; }
    bool has_residuals() const {
        return !trajectories.empty() && trajectories.front().r.size() > 0;
    }

    void validate() const;
};

// Manifest JSON plus raw little-endian doubles [trajectory][time][x then u].
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace cflift
