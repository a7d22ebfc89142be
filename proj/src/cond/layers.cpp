#include "condrnn/cond/layers.hpp"

#include <cmath>

#include "condrnn/error.hpp"

namespace condrnn::cond {

using diff::Parameter;
using diff::Tensor;
using diff::Var;

Linear::Linear(std::string name, std::size_t in, std::size_t out, const diff::RngStream& rng) {
    auto stream = rng.split(name + ".weight");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w(diff::Shape{in, out});
    for (auto& v : w.data()) v = stream.uniform(-bound, bound);
    weight = Parameter(name + ".weight", std::move(w));
    bias = Parameter(name + ".bias", Tensor(diff::Shape{out}));
}

Var Linear::forward(diff::Tape& tape, Var x) {
    return diff::add_row_bias(diff::matmul(x, tape.parameter(weight)), tape.parameter(bias));
}

FeedForward::FeedForward(const std::string& name, const std::vector<std::size_t>& widths, Activation act,
                         bool activate_last, const diff::RngStream& rng)
    : activation(act), activate_last(activate_last) {
    if (widths.size() < 2) throw ConfigError("feed-forward network needs at least an input and output width");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        layers.emplace_back(name + ".l" + std::to_string(i), widths[i], widths[i + 1], rng);
    }
}

Var FeedForward::forward(diff::Tape& tape, Var x, double slope, double dropout_rate, bool training,
                         diff::RngStream& rng) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = layers[i].forward(tape, x);
        if (i + 1 == layers.size() && !activate_last) break;
        x = activation == Activation::LeakyRelu ? diff::leaky_relu(x, slope) : diff::relu(x);
        x = diff::dropout(x, dropout_rate, training, rng);
    }
    return x;
}

void FeedForward::for_each_parameter(const std::function<void(Parameter&)>& fn) {
    for (auto& l : layers) {
        fn(l.weight);
        fn(l.bias);
    }
}

} // namespace condrnn::cond
