#pragma once

#include <string>
#include <vector>

#include "condrnn/diff/grad_check.hpp"
#include "condrnn/train/model.hpp"

namespace condrnn::train {

struct GradSuiteEntry {
    std::string name;
    double error = 0.0;
    double tolerance = 0.0;
    std::size_t coordinates = 0;

    bool passed() const { return error < tolerance; }
};

inline constexpr double kPrimitiveTolerance = 1e-6;
inline constexpr double kComposedTolerance = 1e-4;

/// Finite-difference checks of every differentiable primitive and of the
/// composed models (d = 4, d_s = 2, T = 3, H = 8, K = 3).
std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed = 1);

/// Loss of a small model on a fixed random batch, for checking gradients
/// end to end.
GradSuiteEntry check_composed(Variant variant, dyn::TaskKind task, std::uint64_t seed);

} // namespace condrnn::train
