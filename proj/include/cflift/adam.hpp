#pragma once

#include <cstdint>
#include <vector>

#include "cflift/matrix.hpp"

namespace cflift {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::int64_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    static AdamState init(const std::vector<Matrix>& params, AdamConfig cfg = {});
};

// Bias-corrected Adam update, in place. Deterministic given inputs.
void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state);

double global_grad_norm(const std::vector<Matrix>& grads);

// Global-norm clip: rescales all gradients by max_norm / norm when the global
// norm exceeds max_norm. Returns the pre-clip norm.
double clip_gradients(std::vector<Matrix>& grads, double max_norm);

}  // namespace cflift
