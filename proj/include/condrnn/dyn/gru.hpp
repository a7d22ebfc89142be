#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "condrnn/cond/layers.hpp"

namespace condrnn::dyn {

/// One gated recurrent layer with separate update (z), reset (r) and
/// candidate (h) weights. Each weight acts on [x, h] and has shape
/// [(in + H) x H].
struct GruLayer {
    GruLayer() = default;
    /// Weights uniform in +-1/sqrt(H), biases zero.
    GruLayer(const std::string& name, std::size_t in, std::size_t hidden, const diff::RngStream& rng);

    std::size_t in() const { return w_z.value.shape()[0] - hidden(); }
    std::size_t hidden() const { return w_z.value.shape()[1]; }

    /// h' = (1 - z) * h + z * tanh(W_h [x, r * h] + b_h).
    diff::Var step(diff::Tape& tape, diff::Var x, diff::Var h);

    diff::Parameter w_z, b_z, w_r, b_r, w_h, b_h;
};

/// Per-layer hidden vectors, each [B x H].
struct HiddenState {
    std::vector<diff::Var> layers;
};

struct GruStack {
    GruStack() = default;
    GruStack(std::size_t input_width, std::size_t hidden, std::size_t layers, const diff::RngStream& rng);

    std::size_t input_width() const { return layers.front().in(); }
    std::size_t hidden() const { return layers.front().hidden(); }
    void for_each_parameter(const std::function<void(diff::Parameter&)>& fn);

    /// All-zero state for a batch of `batch` sequences.
    HiddenState zero_state(diff::Tape& tape, std::size_t batch) const;

    std::vector<GruLayer> layers;
};

/// One time step through every layer; layer l's output feeds layer l+1.
/// `input` is [B x input_width] (or a vector for B = 1).
HiddenState gru_step(diff::Var input, const HiddenState& state, GruStack& stack);

} // namespace condrnn::dyn
