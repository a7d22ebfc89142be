#pragma once

#include <functional>
#include <span>

#include "condrnn/diff/tape.hpp"

namespace condrnn::diff {

/// Builds a scalar loss on the given tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    /// Parameter name and flat coordinate of the worst disagreement.
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients against central differences
/// (f(p + step) - f(p - step)) / (2 step), coordinate by coordinate.
/// The error is |analytic - numeric| / max(1, |numeric|). `f` must be
/// deterministic. Parameter values are restored on return; their grad
/// accumulators are overwritten.
GradCheckResult grad_check(const LossBuilder& f, std::span<Parameter* const> params, double step = 1e-5);

} // namespace condrnn::diff
