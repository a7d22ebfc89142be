#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "condrnn/diff/tensor.hpp"

namespace condrnn::diff {

/// Which optimizer owns a parameter.
enum class ParamGroup { Embedding, Network };

/// A learnable tensor with its gradient accumulator.
struct Parameter {
    Parameter() = default;
    Parameter(std::string name, Tensor value, ParamGroup group = ParamGroup::Network)
        : name(std::move(name)), value(std::move(value)), grad(this->value.shape()), group(group) {}

    void zero_grad() { grad.fill(0.0); }

    std::string name;
    Tensor value;
    Tensor grad;
    ParamGroup group = ParamGroup::Network;
};

class Tape;

/// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Define-by-run record of a forward computation.
///
/// Nodes are appended in execution order, so the vector order is already a
/// topological order. A tape is single-owner; build a fresh one per batch.
class Tape {
public:
    /// Receives the output gradient and one slot per input; a slot is null
    /// when that input does not need a gradient.
    using Backward = std::function<void(const Tensor& grad_out, std::span<Tensor* const> input_grads)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf bound to a parameter. Repeated calls for the same parameter
    /// return the same node.
    Var parameter(Parameter& p);
    /// Append a node computed from `inputs`. `backward` may be empty for
    /// non-differentiable results.
    Var record(Tensor value, std::vector<Var> inputs, Backward backward);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    /// Gradient after backward; exact zeros for nodes the loss does not reach.
    Tensor grad(Var v) const;

    /// Reverse-mode sweep from a single-element loss. Parameter gradients
    /// are added into each bound Parameter::grad.
    void backward(Var loss);
    void reset();

    std::size_t size() const { return nodes_.size(); }
    bool backward_done() const { return backward_done_; }

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        Backward backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    void check_owned(Var v) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
    bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

} // namespace condrnn::diff
