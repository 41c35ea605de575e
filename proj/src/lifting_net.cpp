#include "cflift/lifting_net.hpp"

#include <cmath>

namespace cflift {

void LiftingNet::validate() const {
    require_shape(!weights.empty(), "LiftingNet: no layers");
    require_shape(act == Activation::tanh || act == Activation::relu || act == Activation::elu,
                  "LiftingNet: activation must satisfy sigma(0) = 0 (tanh, relu, elu)");
    for (std::size_t i = 1; i < weights.size(); ++i) {
        require_shape(weights[i].cols() == weights[i - 1].rows(),
                      "LiftingNet: layer " + std::to_string(i) + " input " +
                          shape_str(weights[i]) + " vs previous " + shape_str(weights[i - 1]));
    }
    for (const Matrix& w : weights) {
        require_finite(w, "LiftingNet weights");
    }
}

Matrix LiftingNet::forward(const Matrix& x) const {
    require_shape(x.rows() == input_dim(), "LiftingNet::forward: input is " + shape_str(x) +
                                               ", expected " + std::to_string(input_dim()) +
                                               " rows");
    Matrix h = x;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        h = weights[i] * h;
        if (i + 1 < weights.size()) {
            const Activation f = act;
            h = h.unaryExpr([f](double v) { return apply_activation(f, v); });
        }
    }
    return h;
}

LiftingNet LiftingNet::create(Index input, const std::vector<Index>& hidden, Index output,
                              Activation act, std::mt19937_64& rng) {
    LiftingNet net;
    net.act = act;
    std::vector<Index> dims;
    dims.push_back(input);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output);
    for (std::size_t i = 1; i < dims.size(); ++i) {
        // fan-in scaled normal init
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(dims[i - 1])));
        Matrix w(dims[i], dims[i - 1]);
        for (Index r = 0; r < w.rows(); ++r) {
            for (Index c = 0; c < w.cols(); ++c) {
                w(r, c) = dist(rng);
            }
        }
        net.weights.push_back(std::move(w));
    }
    net.validate();
    return net;
}

std::vector<NodeRef> net_on_tape(Tape& tape, const LiftingNet& net) {
    net.validate();
    std::vector<NodeRef> refs;
    refs.reserve(net.weights.size());
    for (const Matrix& w : net.weights) {
        refs.push_back(tape.parameter(w));
    }
    return refs;
}

NodeRef net_forward(Tape& tape, const std::vector<NodeRef>& weights, Activation act, NodeRef x) {
    NodeRef h = x;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        h = tape.matmul(weights[i], h);
        if (i + 1 < weights.size()) {
            h = tape.activation(h, act);
        }
    }
    return h;
}

}  // namespace cflift
