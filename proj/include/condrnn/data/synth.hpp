#pragma once

#include <cstddef>
#include <cstdint>

#include "condrnn/data/dataset.hpp"

namespace condrnn::data {

/// Desk-scale synthetic data.
///
/// Classification: each class is a damped linear oscillator per latent
/// channel with class-specific frequencies and levels; every sensor observes
/// an affine, noisy mix of the latent channels (one dominant channel each).
/// Regression: run-to-failure engines whose sensors mix a monotone
/// degradation curve with operating-condition noise.
struct SynthConfig {
    std::size_t sensors = 12;
    TaskKind task = TaskKind::Classification;
    std::size_t classes = 4;
    std::size_t instances = 800;
    /// Series length (classification) or minimum observed life (regression).
    std::size_t length = 32;
    std::uint64_t seed = 7;
    /// Observation noise, in latent units.
    double noise = 0.1;
};

/// Throws ConfigError unless d >= 4 and N >= 40.
void validate(const SynthConfig& config);

Dataset synth_generate(const SynthConfig& config);

} // namespace condrnn::data
