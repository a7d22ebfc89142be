#pragma once

#include <cstddef>
#include <span>

namespace condrnn::bench {

/// Percentage of mismatched labels. Throws ContractError when empty or when
/// the lengths differ.
double error_rate(std::span<const std::size_t> predicted, std::span<const std::size_t> labels);

/// Root mean squared error in the units of the inputs.
double rmse(std::span<const double> predicted, std::span<const double> targets);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> xs);

/// Two-sided p-value of Welch's unequal-variance t-test. NaN when either
/// sample has fewer than two values or both variances vanish.
double welch_p_value(std::span<const double> a, std::span<const double> b);

} // namespace condrnn::bench
