#include "condrnn/diff/tape.hpp"

#include "condrnn/error.hpp"

namespace condrnn::diff {

void Tape::check_owned(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) {
        throw ContractError("variable does not belong to this tape");
    }
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
    return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
    nodes_.push_back(Node{p.value, {}, {}, &p, true});
    param_nodes_.emplace(&p, nodes_.size() - 1);
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, Backward backward) {
    Node node;
    node.value = std::move(value);
    node.inputs.reserve(inputs.size());
    for (const auto& in : inputs) {
        check_owned(in);
        node.inputs.push_back(in.id);
        node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
    }
    if (node.requires_grad && backward) {
        node.backward = std::move(backward);
    } else {
        node.requires_grad = false;
    }
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
    check_owned(v);
    if (v.id < grads_.size() && grads_[v.id].size() == nodes_[v.id].value.size() &&
        grads_[v.id].shape() == nodes_[v.id].value.shape()) {
        return grads_[v.id];
    }
    return Tensor(nodes_[v.id].value.shape());
}

void Tape::backward(Var loss) {
    check_owned(loss);
    if (backward_done_) throw ContractError("backward called twice on the same tape without reset");
    const Tensor& lv = nodes_[loss.id].value;
    if (lv.size() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " + shape_string(lv.shape()));
    }
    backward_done_ = true;

    grads_.assign(nodes_.size(), Tensor());
    std::vector<bool> touched(nodes_.size(), false);
    grads_[loss.id] = Tensor::filled(lv.shape(), 1.0);
    touched[loss.id] = true;

    std::vector<Tensor*> slots;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!touched[i] || !node.requires_grad || !node.backward) continue;
        slots.assign(node.inputs.size(), nullptr);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            std::size_t in = node.inputs[k];
            if (!nodes_[in].requires_grad) continue;
            if (!touched[in]) {
                grads_[in] = Tensor(nodes_[in].value.shape());
                touched[in] = true;
            }
            slots[k] = &grads_[in];
        }
        node.backward(grads_[i], slots);
    }

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        Parameter* p = nodes_[i].param;
        if (!p || !touched[i]) continue;
        if (p->grad.shape() != p->value.shape()) p->grad = Tensor(p->value.shape());
        auto g = grads_[i].data();
        auto acc = p->grad.data();
        for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
    }
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
    param_nodes_.clear();
    backward_done_ = false;
}

} // namespace condrnn::diff
