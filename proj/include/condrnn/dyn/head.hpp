#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "condrnn/dyn/gru.hpp"

namespace condrnn::dyn {

enum class TaskKind { Classification, Regression };

/// ReLU feed-forward layers followed by a linear map and softmax (K-way
/// classification) or sigmoid (regression, one output).
struct OutputHead {
    OutputHead() = default;
    OutputHead(std::size_t hidden, TaskKind task, std::size_t classes, std::size_t relu_layers,
               double dropout, const diff::RngStream& rng);

    /// [B x H] features -> [B x K] probabilities or [B x 1] in (0, 1).
    diff::Var forward(diff::Tape& tape, diff::Var features, bool training, diff::RngStream& rng);
    void for_each_parameter(const std::function<void(diff::Parameter&)>& fn) { net.for_each_parameter(fn); }
    std::size_t outputs() const { return net.out(); }

    cond::FeedForward net;
    TaskKind task = TaskKind::Classification;
    double dropout = 0.2;
};

/// Runs the stack over `steps` (each [B x d]) from a zero state, appending
/// `cond` (a length-d_s vector, when present) to every step, and applies the
/// head to the final top-layer state.
diff::Var forward_batch(diff::Tape& tape, std::span<const diff::Var> steps, std::optional<diff::Var> cond,
                        GruStack& stack, OutputHead& head, bool training, diff::RngStream& rng);

/// Single-sequence form: `series` is [T x d]. Returns [K] probabilities or a
/// [1] regression output.
diff::Var forward_sequence(diff::Tape& tape, const diff::Tensor& series, std::optional<diff::Var> cond,
                           GruStack& stack, OutputHead& head, bool training, diff::RngStream& rng);

/// Argmax with lowest-index tie-break.
std::size_t predict_label(std::span<const double> probabilities);
double denormalize_rul(double y, double min, double max);
double normalize_rul(double rul, double min, double max);

} // namespace condrnn::dyn
