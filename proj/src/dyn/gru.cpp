#include "condrnn/dyn/gru.hpp"

#include <cmath>

#include "condrnn/error.hpp"

namespace condrnn::dyn {

using diff::Parameter;
using diff::Tensor;
using diff::Var;

namespace {

Parameter uniform_param(const std::string& name, diff::Shape shape, double bound, const diff::RngStream& rng) {
    auto stream = rng.split(name);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = stream.uniform(-bound, bound);
    return Parameter(name, std::move(t));
}

Var gate(diff::Tape& tape, Var xh, Parameter& w, Parameter& b) {
    return diff::add_row_bias(diff::matmul(xh, tape.parameter(w)), tape.parameter(b));
}

} // namespace

GruLayer::GruLayer(const std::string& name, std::size_t in, std::size_t hidden, const diff::RngStream& rng) {
    if (in == 0 || hidden == 0) throw ConfigError("GRU layer needs positive widths");
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    const diff::Shape ws{in + hidden, hidden};
    w_z = uniform_param(name + ".w_z", ws, bound, rng);
    w_r = uniform_param(name + ".w_r", ws, bound, rng);
    w_h = uniform_param(name + ".w_h", ws, bound, rng);
    b_z = Parameter(name + ".b_z", Tensor(diff::Shape{hidden}));
    b_r = Parameter(name + ".b_r", Tensor(diff::Shape{hidden}));
    b_h = Parameter(name + ".b_h", Tensor(diff::Shape{hidden}));
}

Var GruLayer::step(diff::Tape& tape, Var x, Var h) {
    Var xh = diff::concat(x, h);
    Var z = diff::sigmoid(gate(tape, xh, w_z, b_z));
    Var r = diff::sigmoid(gate(tape, xh, w_r, b_r));
    Var candidate = diff::tanh(gate(tape, diff::concat(x, diff::mul(r, h)), w_h, b_h));
    // (1 - z) h + z h~ == h + z (h~ - h)
    return diff::add(h, diff::mul(z, diff::sub(candidate, h)));
}

GruStack::GruStack(std::size_t input_width, std::size_t hidden, std::size_t n_layers, const diff::RngStream& rng) {
    if (n_layers == 0) throw ConfigError("GRU stack needs at least one layer");
    for (std::size_t l = 0; l < n_layers; ++l) {
        layers.emplace_back("gru.l" + std::to_string(l), l == 0 ? input_width : hidden, hidden, rng);
    }
}

void GruStack::for_each_parameter(const std::function<void(Parameter&)>& fn) {
    for (auto& l : layers) {
        fn(l.w_z);
        fn(l.b_z);
        fn(l.w_r);
        fn(l.b_r);
        fn(l.w_h);
        fn(l.b_h);
    }
}

HiddenState GruStack::zero_state(diff::Tape& tape, std::size_t batch) const {
    HiddenState s;
    for (const auto& l : layers) s.layers.push_back(tape.constant(Tensor(diff::Shape{batch, l.hidden()})));
    return s;
}

HiddenState gru_step(Var input, const HiddenState& state, GruStack& stack) {
    if (state.layers.size() != stack.layers.size()) throw DimensionError("gru_step: state/stack layer count mismatch");
    diff::Tape& tape = *input.tape;
    Var x = input;
    if (x.value().rank() == 1) x = diff::reshape(x, diff::Shape{1, x.value().size()});
    if (x.value().rank() != 2 || x.value().shape()[1] != stack.input_width()) {
        throw DimensionError("gru_step: input " + diff::shape_string(input.shape()) + " does not match width " +
                             std::to_string(stack.input_width()));
    }
    HiddenState next;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        if (state.layers[l].value().shape() != diff::Shape{x.value().shape()[0], stack.layers[l].hidden()}) {
            throw DimensionError("gru_step: hidden state shape mismatch at layer " + std::to_string(l));
        }
        x = stack.layers[l].step(tape, x, state.layers[l]);
        next.layers.push_back(x);
    }
    return next;
}

} // namespace condrnn::dyn
