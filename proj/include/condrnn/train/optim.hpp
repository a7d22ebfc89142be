#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "condrnn/diff/tape.hpp"

namespace condrnn::train {

/// Plain gradient descent without momentum: v <- v - lr g. Rows whose
/// gradient is zero stay bit-identical.
void sgd_step(diff::Parameter& param, double lr);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moment buffers keyed by parameter name.
struct AdamState {
    struct Moments {
        diff::Tensor m;
        diff::Tensor v;
    };
    std::map<std::string, Moments> moments;
    std::size_t step = 0;
};

/// Bias-corrected adaptive-moment update of every parameter in `params`.
void adam_step(std::span<diff::Parameter* const> params, AdamState& state, const AdamConfig& config);

} // namespace condrnn::train
