#include "cflift/adam.hpp"

#include <cmath>

namespace cflift {

AdamState AdamState::init(const std::vector<Matrix>& params, AdamConfig cfg) {
    AdamState st;
    st.cfg = cfg;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const Matrix& p : params) {
        st.m.push_back(Matrix::Zero(p.rows(), p.cols()));
        st.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
    return st;
}

void adam_step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, AdamState& state) {
    require_shape(params.size() == grads.size() && params.size() == state.m.size(),
                  "adam_step: parameter/gradient/state counts disagree");
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_shape(params[i].rows() == grads[i].rows() && params[i].cols() == grads[i].cols(),
                      "adam_step: gradient shape mismatch at parameter " + std::to_string(i));
        state.m[i] = state.cfg.beta1 * state.m[i] + (1.0 - state.cfg.beta1) * grads[i];
        state.v[i] = state.cfg.beta2 * state.v[i].array().matrix() +
                     (1.0 - state.cfg.beta2) * grads[i].cwiseProduct(grads[i]);
        const Matrix mhat = state.m[i] / c1;
        const Matrix vhat = state.v[i] / c2;
        params[i].array() -=
            state.cfg.lr * mhat.array() / (vhat.array().sqrt() + state.cfg.eps);
    }
}

double global_grad_norm(const std::vector<Matrix>& grads) {
    double sq = 0.0;
    for (const Matrix& g : grads) {
        sq += g.squaredNorm();
    }
    return std::sqrt(sq);
}

double clip_gradients(std::vector<Matrix>& grads, double max_norm) {
    const double norm = global_grad_norm(grads);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (Matrix& g : grads) {
            g *= s;
        }
    }
    return norm;
}

}  // namespace cflift
