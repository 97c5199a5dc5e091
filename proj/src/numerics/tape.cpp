#include "factorcast/numerics/tape.hpp"

#include <algorithm>

namespace factorcast::num {

std::string_view op_name(Op op) noexcept {
    switch (op) {
        case Op::Constant: return "constant";
        case Op::Variable: return "variable";
        case Op::Parameter: return "parameter";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::AddScalar: return "add_scalar";
        case Op::MatMul: return "matmul";
        case Op::Affine: return "affine";
        case Op::Conv1d: return "conv1d";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sqrt: return "sqrt";
        case Op::Neg: return "neg";
        case Op::Relu: return "relu";
        case Op::Square: return "square";
        case Op::Softmax: return "softmax";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Frobenius: return "frobenius";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Reshape: return "reshape";
        case Op::Permute: return "permute";
        case Op::TakeColumns: return "take_columns";
        case Op::ScalePerSample: return "scale_per_sample";
        case Op::SumPerSample: return "sum_per_sample";
    }
    return "unknown";
}

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad_view(id_); }
Op Var::op() const { return tape_->op(id_); }

Var Tape::push_leaf(Op op, Tensor value, bool needs_grad, Parameter* param) {
    if (!value.all_finite()) {
        throw NonFiniteError(std::string("non-finite value in ") + std::string(op_name(op)) +
                             (param ? " '" + param->name + "'" : std::string()));
    }
    Node n;
    n.grad = needs_grad ? Tensor(value.shape) : Tensor();
    n.value = std::move(value);
    n.op = op;
    n.needs_grad = needs_grad;
    n.param = param;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) { return push_leaf(Op::Constant, std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) { return push_leaf(Op::Variable, std::move(value), true, nullptr); }

Var Tape::parameter(Parameter& p) { return push_leaf(Op::Parameter, p.value, true, &p); }

Var Tape::record(Op op, Tensor value, std::span<const Var> parents, Backward backward) {
    if (!value.all_finite()) {
        throw NonFiniteError(std::string("non-finite output from ") + std::string(op_name(op)) +
                             " of shape " + value.shape.str());
    }
    bool needs = false;
    for (const Var& p : parents) {
        if (p.tape() != this) throw std::invalid_argument("operands recorded on different tapes");
        needs = needs || nodes_[p.id()].needs_grad;
    }
    Node n;
    n.grad = needs ? Tensor(value.shape) : Tensor();
    n.value = std::move(value);
    n.op = op;
    n.needs_grad = needs;
    if (needs) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.shape.numel() != n.value.shape.numel() || n.grad.data.empty()) {
        n.grad = Tensor(n.value.shape);
    }
    return n.grad;
}

const Tensor& Tape::grad_view(int id) const {
    const Node& n = nodes_[id];
    if (n.grad.data.size() != n.value.data.size()) n.grad = Tensor(n.value.shape);
    return n.grad;
}

void Tape::backward(Var root) {
    if (root.tape() != this) throw std::invalid_argument("root recorded on a different tape");
    if (nodes_[root.id()].value.size() != 1) {
        throw ShapeError("backward requires a scalar root, got shape " +
                         nodes_[root.id()].value.shape.str());
    }
    const int rid = root.id();
    for (int i = 0; i <= rid; ++i) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.op == Op::Variable) continue;
        std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
    }
    if (!nodes_[rid].needs_grad) return;
    nodes_[rid].grad.data[0] += 1.0;
    for (int i = rid; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.backward) n.backward(*this, i);
    }
    for (int i = 0; i <= rid; ++i) {
        Node& n = nodes_[i];
        if (n.param == nullptr) continue;
        if (n.param->grad.data.size() != n.grad.data.size()) {
            n.param->grad = Tensor(n.param->value.shape);
        }
        auto& dst = n.param->grad.data;
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad.data[k];
    }
}

}  // namespace factorcast::num
