#pragma once

#include <random>
#include <vector>

#include "cflift/tape.hpp"

namespace cflift {

// Bias-free MLP: Psi(0) = 0 holds structurally because every layer is linear
// and the activation fixes 0. Hidden layers are activated, the output layer
// is linear.
struct LiftingNet {
    Activation act = Activation::elu;
    std::vector<Matrix> weights;  // layer i maps weights[i].cols() -> rows()

    Index input_dim() const { return weights.front().cols(); }
    Index output_dim() const { return weights.back().rows(); }

    void validate() const;

    // Batch forward, columns are samples.
    Matrix forward(const Matrix& x) const;

    static LiftingNet create(Index input, const std::vector<Index>& hidden, Index output,
                             Activation act, std::mt19937_64& rng);
};

std::vector<NodeRef> net_on_tape(Tape& tape, const LiftingNet& net);

NodeRef net_forward(Tape& tape, const std::vector<NodeRef>& weights, Activation act, NodeRef x);

}  // namespace cflift
