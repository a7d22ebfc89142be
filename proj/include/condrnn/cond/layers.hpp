#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "condrnn/diff/ops.hpp"

namespace condrnn::cond {

/// Fully connected layer y = x W + b with W of shape [in x out].
struct Linear {
    Linear() = default;
    /// Weights uniform in +-1/sqrt(in) drawn from rng.split(name), bias zero.
    Linear(std::string name, std::size_t in, std::size_t out, const diff::RngStream& rng);

    diff::Var forward(diff::Tape& tape, diff::Var x);
    std::size_t in() const { return weight.value.shape()[0]; }
    std::size_t out() const { return weight.value.shape()[1]; }

    diff::Parameter weight;
    diff::Parameter bias;
};

enum class Activation { LeakyRelu, Relu };

/// Stack of Linear layers, each followed by an activation and dropout.
/// With `activate_last == false` the final layer stays linear.
struct FeedForward {
    FeedForward() = default;
    FeedForward(const std::string& name, const std::vector<std::size_t>& widths, Activation act,
                bool activate_last, const diff::RngStream& rng);

    diff::Var forward(diff::Tape& tape, diff::Var x, double slope, double dropout_rate, bool training,
                      diff::RngStream& rng);

    std::size_t in() const { return layers.front().in(); }
    std::size_t out() const { return layers.back().out(); }
    void for_each_parameter(const std::function<void(diff::Parameter&)>& fn);

    std::vector<Linear> layers;
    Activation activation = Activation::LeakyRelu;
    bool activate_last = true;
};

} // namespace condrnn::cond
