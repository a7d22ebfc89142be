#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "condrnn/diff/tape.hpp"

namespace condrnn::train {

inline constexpr double kLogFloor = 1e-12;

/// -(1/B) sum_i sum_k y_ik log(max(p_ik, 1e-12)) for probabilities [B x K]
/// and one-hot targets [B x K].
diff::Var cross_entropy(diff::Var probs, const diff::Tensor& one_hot);

/// Mean of (p - y)^2; `pred` is [B] or [B x 1].
diff::Var squared_error(diff::Var pred, std::span<const double> target);

diff::Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes);

} // namespace condrnn::train
