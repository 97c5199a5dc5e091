#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factorcast/numerics/tensor.hpp"

namespace factorcast::num {

enum class Op : std::uint8_t {
    Constant,
    Variable,
    Parameter,
    Add,
    Sub,
    Mul,
    Scale,
    AddScalar,
    MatMul,
    Affine,
    Conv1d,
    Tanh,
    Sigmoid,
    Exp,
    Log,
    Sqrt,
    Neg,
    Relu,
    Square,
    Softmax,
    Sum,
    Mean,
    Frobenius,
    Concat,
    Slice,
    Reshape,
    Permute,
    TakeColumns,
    ScalePerSample,
    SumPerSample,
};

std::string_view op_name(Op op) noexcept;

/// A named learnable array with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] const Tensor& grad() const;
    [[nodiscard]] const Shape& shape() const { return value().shape; }
    [[nodiscard]] Op op() const;
    [[nodiscard]] Tape* tape() const noexcept { return tape_; }
    [[nodiscard]] int id() const noexcept { return id_; }
    [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Eager reverse-mode recorder. Nodes are appended in creation order, which is a
/// topological order of the graph, so backward is a single reverse sweep.
///
/// One tape belongs to one thread at a time. Parameters referenced by the tape must
/// outlive it.
class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// A leaf whose gradient is tracked and accumulated across backward calls.
    Var variable(Tensor value);
    /// A leaf bound to a Parameter; backward adds into Parameter::grad.
    Var parameter(Parameter& p);

    /// Propagates d(root)/d(node) to every node. Root must hold exactly one element.
    void backward(Var root);

    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    // Primitive-author interface.
    Var record(Op op, Tensor value, std::span<const Var> parents, Backward backward);
    Var record(Op op, Tensor value, std::initializer_list<Var> parents, Backward backward) {
        return record(op, std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                      std::move(backward));
    }
    [[nodiscard]] const Tensor& value(int id) const { return nodes_[id].value; }
    [[nodiscard]] bool needs_grad(int id) const { return nodes_[id].needs_grad; }
    Tensor& grad(int id);
    [[nodiscard]] const Tensor& grad_view(int id) const;
    [[nodiscard]] Op op(int id) const { return nodes_[id].op; }

private:
    struct Node {
        Tensor value;
        mutable Tensor grad;
        Op op = Op::Constant;
        bool needs_grad = false;
        Backward backward;
        Parameter* param = nullptr;
    };

    Var push_leaf(Op op, Tensor value, bool needs_grad, Parameter* param);

    std::vector<Node> nodes_;
};

}  // namespace factorcast::num
