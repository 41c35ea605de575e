#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "cflift/matrix.hpp"

namespace cflift {

// Define-by-run reverse-mode tape over a fixed op set. One tape per worker;
// matrices are immutable once recorded.

enum class OpKind : std::uint8_t {
    leaf,
    matmul,
    add,
    sub,
    scale,        // 1x1 node times matrix node
    transpose,
    concat_rows,
    concat_cols,
    slice,
    activation,   // elementwise, see Activation
    exp_elem,
    solve,        // X = A^{-1} B, adjoint-solve rule in backward
    mse,          // mean of squared entries -> 1x1
    frobenius,    // Frobenius norm -> 1x1
    sum,          // sum of entries -> 1x1
    negate,
};

enum class Activation : std::uint8_t { tanh, relu, elu, clamp };

const char* op_name(OpKind k);
const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Applied entrywise off-tape as well (used by LiftingNet::forward).
double apply_activation(Activation f, double x);
double activation_slope(Activation f, double x);

struct SliceSpec {
    Index row0 = 0;
    Index col0 = 0;
    Index rows = 0;
    Index cols = 0;
};

using NodeRef = std::int32_t;

struct TapeNode {
    OpKind kind = OpKind::leaf;
    std::vector<NodeRef> inputs;
    Matrix value;
    Activation act = Activation::tanh;
    SliceSpec span;
    bool trainable = false;
    bool needs_grad = false;
    std::shared_ptr<Eigen::PartialPivLU<Matrix>> lu;  // cached for solve backward
};

// Gradient of a scalar root w.r.t. every trainable leaf, keyed by leaf ref.
using Gradients = std::map<NodeRef, Matrix>;

class Tape {
public:
    NodeRef constant(Matrix v);
    NodeRef parameter(Matrix v);
    NodeRef scalar_constant(double v);

    NodeRef matmul(NodeRef a, NodeRef b);
    NodeRef add(NodeRef a, NodeRef b);
    NodeRef sub(NodeRef a, NodeRef b);
    NodeRef scale(NodeRef s, NodeRef m);
    NodeRef transpose(NodeRef a);
    NodeRef concat_rows(const std::vector<NodeRef>& parts);
    NodeRef concat_cols(const std::vector<NodeRef>& parts);
    NodeRef slice(NodeRef a, Index row0, Index col0, Index rows, Index cols);
    NodeRef activation(NodeRef a, Activation f);
    NodeRef exp_elem(NodeRef a);
    NodeRef solve(NodeRef a, NodeRef b);
    NodeRef mse(NodeRef a);
    NodeRef frobenius(NodeRef a);
    NodeRef sum(NodeRef a);
    NodeRef negate(NodeRef a);

    const Matrix& value(NodeRef r) const { return nodes_.at(static_cast<std::size_t>(r)).value; }
    double scalar(NodeRef r) const;
    std::size_t size() const { return nodes_.size(); }
    bool trainable(NodeRef r) const { return nodes_.at(static_cast<std::size_t>(r)).trainable; }

    // Reverse pass from a 1x1 root. Throws std::invalid_argument for
    // non-scalar roots.
    Gradients backward(NodeRef root) const;

private:
    NodeRef push(TapeNode n);
    const TapeNode& node(NodeRef r) const { return nodes_.at(static_cast<std::size_t>(r)); }

    std::vector<TapeNode> nodes_;
};

// Max over parameter entries of |analytic - central difference| /
// (|analytic| + |central| + 1e-12). `build` records a 1x1 node from the given
// parameter leaves; it is re-run with perturbed inputs for the differences.
double grad_check(const std::function<NodeRef(Tape&, const std::vector<NodeRef>&)>& build,
                  const std::vector<Matrix>& point, double step);

}  // namespace cflift
