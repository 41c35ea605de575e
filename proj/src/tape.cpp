#include "cflift/tape.hpp"

#include <cmath>

#include "cflift/numkernel.hpp"

namespace cflift {

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::leaf: return "leaf";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::scale: return "scale";
        case OpKind::transpose: return "transpose";
        case OpKind::concat_rows: return "concat-rows";
        case OpKind::concat_cols: return "concat-cols";
        case OpKind::slice: return "slice";
        case OpKind::activation: return "elementwise-activation";
        case OpKind::exp_elem: return "elementwise-exp";
        case OpKind::solve: return "linear-solve";
        case OpKind::mse: return "mse-reduction";
        case OpKind::frobenius: return "frobenius-norm";
        case OpKind::sum: return "sum";
        case OpKind::negate: return "negate";
    }
    return "?";
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::elu: return "elu";
        case Activation::clamp: return "clamp";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "elu") return Activation::elu;
    if (name == "clamp") return Activation::clamp;
    throw std::invalid_argument("unknown activation: " + name);
}

namespace {
constexpr double kClampBound = 30.0;
}

double apply_activation(Activation f, double x) {
    switch (f) {
        case Activation::tanh: return std::tanh(x);
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::elu: return x > 0.0 ? x : std::expm1(x);
        case Activation::clamp: return x > kClampBound ? kClampBound : (x < -kClampBound ? -kClampBound : x);
    }
    return x;
}

double activation_slope(Activation f, double x) {
    switch (f) {
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::elu: return x > 0.0 ? 1.0 : std::exp(x);
        case Activation::clamp: return (x > kClampBound || x < -kClampBound) ? 0.0 : 1.0;
    }
    return 1.0;
}

NodeRef Tape::push(TapeNode n) {
    require_finite(n.value, std::string(op_name(n.kind)));
    nodes_.push_back(std::move(n));
    return static_cast<NodeRef>(nodes_.size() - 1);
}

NodeRef Tape::constant(Matrix v) {
    TapeNode n;
    n.kind = OpKind::leaf;
    n.value = std::move(v);
    return push(std::move(n));
}

NodeRef Tape::parameter(Matrix v) {
    TapeNode n;
    n.kind = OpKind::leaf;
    n.value = std::move(v);
    n.trainable = true;
    n.needs_grad = true;
    return push(std::move(n));
}

NodeRef Tape::scalar_constant(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
}

double Tape::scalar(NodeRef r) const {
    const Matrix& v = value(r);
    require_shape(v.rows() == 1 && v.cols() == 1, "scalar: node is " + shape_str(v));
    return v(0, 0);
}

NodeRef Tape::matmul(NodeRef a, NodeRef b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    require_shape(va.cols() == vb.rows(),
                  "matmul: inner dims disagree, " + shape_str(va) + " * " + shape_str(vb));
    TapeNode n;
    n.kind = OpKind::matmul;
    n.inputs = {a, b};
    n.value = va * vb;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::add(NodeRef a, NodeRef b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    require_shape(va.rows() == vb.rows() && va.cols() == vb.cols(),
                  "add: shapes disagree, " + shape_str(va) + " vs " + shape_str(vb));
    TapeNode n;
    n.kind = OpKind::add;
    n.inputs = {a, b};
    n.value = va + vb;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::sub(NodeRef a, NodeRef b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    require_shape(va.rows() == vb.rows() && va.cols() == vb.cols(),
                  "sub: shapes disagree, " + shape_str(va) + " vs " + shape_str(vb));
    TapeNode n;
    n.kind = OpKind::sub;
    n.inputs = {a, b};
    n.value = va - vb;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::scale(NodeRef s, NodeRef m) {
    const Matrix& vs = value(s);
    require_shape(vs.rows() == 1 && vs.cols() == 1, "scale: scalar input is " + shape_str(vs));
    TapeNode n;
    n.kind = OpKind::scale;
    n.inputs = {s, m};
    n.value = vs(0, 0) * value(m);
    n.needs_grad = node(s).needs_grad || node(m).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::transpose(NodeRef a) {
    TapeNode n;
    n.kind = OpKind::transpose;
    n.inputs = {a};
    n.value = value(a).transpose();
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::concat_rows(const std::vector<NodeRef>& parts) {
    require_shape(!parts.empty(), "concat-rows: no inputs");
    Index rows = 0;
    const Index cols = value(parts.front()).cols();
    for (NodeRef p : parts) {
        require_shape(value(p).cols() == cols, "concat-rows: column counts disagree");
        rows += value(p).rows();
    }
    TapeNode n;
    n.kind = OpKind::concat_rows;
    n.inputs = parts;
    n.value.resize(rows, cols);
    Index at = 0;
    for (NodeRef p : parts) {
        const Matrix& v = value(p);
        n.value.middleRows(at, v.rows()) = v;
        at += v.rows();
        n.needs_grad = n.needs_grad || node(p).needs_grad;
    }
    return push(std::move(n));
}

NodeRef Tape::concat_cols(const std::vector<NodeRef>& parts) {
    require_shape(!parts.empty(), "concat-cols: no inputs");
    Index cols = 0;
    const Index rows = value(parts.front()).rows();
    for (NodeRef p : parts) {
        require_shape(value(p).rows() == rows, "concat-cols: row counts disagree");
        cols += value(p).cols();
    }
    TapeNode n;
    n.kind = OpKind::concat_cols;
    n.inputs = parts;
    n.value.resize(rows, cols);
    Index at = 0;
    for (NodeRef p : parts) {
        const Matrix& v = value(p);
        n.value.middleCols(at, v.cols()) = v;
        at += v.cols();
        n.needs_grad = n.needs_grad || node(p).needs_grad;
    }
    return push(std::move(n));
}

NodeRef Tape::slice(NodeRef a, Index row0, Index col0, Index rows, Index cols) {
    const Matrix& v = value(a);
    require_shape(row0 >= 0 && col0 >= 0 && rows >= 0 && cols >= 0 &&
                      row0 + rows <= v.rows() && col0 + cols <= v.cols(),
                  "slice: block out of range for " + shape_str(v));
    TapeNode n;
    n.kind = OpKind::slice;
    n.inputs = {a};
    n.span = {row0, col0, rows, cols};
    n.value = v.block(row0, col0, rows, cols);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::activation(NodeRef a, Activation f) {
    TapeNode n;
    n.kind = OpKind::activation;
    n.inputs = {a};
    n.act = f;
    n.value = value(a).unaryExpr([f](double x) { return apply_activation(f, x); });
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::exp_elem(NodeRef a) {
    TapeNode n;
    n.kind = OpKind::exp_elem;
    n.inputs = {a};
    n.value = value(a).array().exp();
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::solve(NodeRef a, NodeRef b) {
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    require_shape(va.rows() == va.cols(), "linear-solve: lhs not square, " + shape_str(va));
    require_shape(vb.rows() == va.rows(),
                  "linear-solve: rhs rows disagree, " + shape_str(va) + " \\ " + shape_str(vb));
    TapeNode n;
    n.kind = OpKind::solve;
    n.inputs = {a, b};
    n.lu = std::make_shared<Eigen::PartialPivLU<Matrix>>(lu_factor(va));
    n.value = n.lu->solve(vb);
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::mse(NodeRef a) {
    const Matrix& v = value(a);
    require_shape(v.size() > 0, "mse-reduction: empty input");
    Matrix out(1, 1);
    out(0, 0) = v.squaredNorm() / static_cast<double>(v.size());
    TapeNode n;
    n.kind = OpKind::mse;
    n.inputs = {a};
    n.value = std::move(out);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::frobenius(NodeRef a) {
    Matrix out(1, 1);
    out(0, 0) = value(a).norm();
    TapeNode n;
    n.kind = OpKind::frobenius;
    n.inputs = {a};
    n.value = std::move(out);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::sum(NodeRef a) {
    Matrix out(1, 1);
    out(0, 0) = value(a).sum();
    TapeNode n;
    n.kind = OpKind::sum;
    n.inputs = {a};
    n.value = std::move(out);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

NodeRef Tape::negate(NodeRef a) {
    TapeNode n;
    n.kind = OpKind::negate;
    n.inputs = {a};
    n.value = -value(a);
    n.needs_grad = node(a).needs_grad;
    return push(std::move(n));
}

Gradients Tape::backward(NodeRef root) const {
    const Matrix& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw std::invalid_argument("backward: root must be 1x1, got " + shape_str(rv));
    }

    std::vector<Matrix> grads(nodes_.size());
    std::vector<bool> seen(nodes_.size(), false);
    auto accumulate = [&](NodeRef r, const Matrix& g) {
        const auto i = static_cast<std::size_t>(r);
        if (!nodes_[i].needs_grad) {
            return;
        }
        if (!seen[i]) {
            grads[i] = g;
            seen[i] = true;
        } else {
            grads[i] += g;
        }
    };

    accumulate(root, Matrix::Ones(1, 1));

    for (NodeRef r = root; r >= 0; --r) {
        const auto i = static_cast<std::size_t>(r);
        if (!seen[i] || nodes_[i].kind == OpKind::leaf) {
            continue;
        }
        const TapeNode& n = nodes_[i];
        const Matrix& g = grads[i];
        switch (n.kind) {
            case OpKind::matmul:
                accumulate(n.inputs[0], g * value(n.inputs[1]).transpose());
                accumulate(n.inputs[1], value(n.inputs[0]).transpose() * g);
                break;
            case OpKind::add:
                accumulate(n.inputs[0], g);
                accumulate(n.inputs[1], g);
                break;
            case OpKind::sub:
                accumulate(n.inputs[0], g);
                accumulate(n.inputs[1], -g);
                break;
            case OpKind::scale: {
                Matrix gs(1, 1);
                gs(0, 0) = (g.array() * value(n.inputs[1]).array()).sum();
                accumulate(n.inputs[0], gs);
                accumulate(n.inputs[1], value(n.inputs[0])(0, 0) * g);
                break;
            }
            case OpKind::transpose:
                accumulate(n.inputs[0], g.transpose());
                break;
            case OpKind::concat_rows: {
                Index at = 0;
                for (NodeRef p : n.inputs) {
                    const Index pr = value(p).rows();
                    accumulate(p, g.middleRows(at, pr));
                    at += pr;
                }
                break;
            }
            case OpKind::concat_cols: {
                Index at = 0;
                for (NodeRef p : n.inputs) {
                    const Index pc = value(p).cols();
                    accumulate(p, g.middleCols(at, pc));
                    at += pc;
                }
                break;
            }
            case OpKind::slice: {
                Matrix gin = Matrix::Zero(value(n.inputs[0]).rows(), value(n.inputs[0]).cols());
                gin.block(n.span.row0, n.span.col0, n.span.rows, n.span.cols) = g;
                accumulate(n.inputs[0], gin);
                break;
            }
            case OpKind::activation: {
                const Activation f = n.act;
                const Matrix slope =
                    value(n.inputs[0]).unaryExpr([f](double x) { return activation_slope(f, x); });
                accumulate(n.inputs[0], (g.array() * slope.array()).matrix());
                break;
            }
            case OpKind::exp_elem:
                accumulate(n.inputs[0], (g.array() * n.value.array()).matrix());
                break;
            case OpKind::solve: {
                // X = A^{-1} B:  gB = A^{-T} gX,  gA = -gB X^T.
                const Matrix gb = n.lu->transpose().solve(g);
                accumulate(n.inputs[1], gb);
                accumulate(n.inputs[0], -gb * n.value.transpose());
                break;
            }
            case OpKind::mse: {
                const Matrix& x = value(n.inputs[0]);
                accumulate(n.inputs[0], (2.0 * g(0, 0) / static_cast<double>(x.size())) * x);
                break;
            }
            case OpKind::frobenius: {
                const Matrix& x = value(n.inputs[0]);
                const double nrm = n.value(0, 0);
                if (nrm > 0.0) {
                    accumulate(n.inputs[0], (g(0, 0) / nrm) * x);
                }
                break;
            }
            case OpKind::sum:
                accumulate(n.inputs[0],
                           Matrix::Constant(value(n.inputs[0]).rows(), value(n.inputs[0]).cols(),
                                            g(0, 0)));
                break;
            case OpKind::negate:
                accumulate(n.inputs[0], -g);
                break;
            case OpKind::leaf:
                break;
        }
    }

    Gradients out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == OpKind::leaf && nodes_[i].trainable) {
            if (seen[i]) {
                out[static_cast<NodeRef>(i)] = std::move(grads[i]);
            } else {
                out[static_cast<NodeRef>(i)] =
                    Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
            }
        }
    }
    return out;
}

double grad_check(const std::function<NodeRef(Tape&, const std::vector<NodeRef>&)>& build,
                  const std::vector<Matrix>& point, double step) {
    require_shape(step > 0.0, "grad_check: step must be positive");

    Tape tape;
    std::vector<NodeRef> leaves;
    leaves.reserve(point.size());
    for (const Matrix& p : point) {
        leaves.push_back(tape.parameter(p));
    }
    const NodeRef root = build(tape, leaves);
    const Gradients analytic = tape.backward(root);

    auto eval_at = [&](const std::vector<Matrix>& pt) {
        Tape t;
        std::vector<NodeRef> ls;
        ls.reserve(pt.size());
        for (const Matrix& p : pt) {
            ls.push_back(t.constant(p));
        }
        return t.scalar(build(t, ls));
    };

    double worst = 0.0;
    std::vector<Matrix> perturbed = point;
    for (std::size_t p = 0; p < point.size(); ++p) {
        const Matrix& ga = analytic.at(leaves[p]);
        for (Index i = 0; i < point[p].rows(); ++i) {
            for (Index j = 0; j < point[p].cols(); ++j) {
                const double orig = point[p](i, j);
                perturbed[p](i, j) = orig + step;
                const double fp = eval_at(perturbed);
                perturbed[p](i, j) = orig - step;
                const double fm = eval_at(perturbed);
                perturbed[p](i, j) = orig;
                const double central = (fp - fm) / (2.0 * step);
                const double a = ga(i, j);
                const double err = std::abs(a - central) / (std::abs(a) + std::abs(central) + 1e-12);
                worst = std::max(worst, err);
            }
        }
    }
    return worst;
}

}  // namespace cflift
