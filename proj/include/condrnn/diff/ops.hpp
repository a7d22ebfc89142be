#pragma once

#include <cstddef>
#include <span>

#include "condrnn/diff/rng.hpp"
#include "condrnn/diff/tape.hpp"

namespace condrnn::diff {

inline constexpr double kDefaultLeakySlope = 0.01;

// Every operation records one node on the tape that owns its inputs.

/// [m x k] * [k x n] -> [m x n].
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Adds a length-n bias to every row of an [m x n] matrix.
Var add_row_bias(Var x, Var bias);

/// max(x, slope * x). The derivative at 0 is `slope`. slope in (0, 1].
Var leaky_relu(Var x, double slope = kDefaultLeakySlope);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);

/// Inverted dropout: survivors are scaled by 1 / (1 - rate). Identity when
/// not training or when rate is zero.
Var dropout(Var x, double rate, bool training, RngStream& rng);

/// Per-column maximum of an [n x d] matrix. Ties route the gradient to the
/// lowest row index.
Var rowwise_max(Var x);
/// Column sums of an [n x d] matrix; n may be zero.
Var reduce_sum_rows(Var x);
/// Sums rows sharing a segment id into an [n_segments x d] matrix.
Var segment_sum_rows(Var x, std::span<const std::size_t> segment, std::size_t n_segments);
Var gather_rows(Var x, std::span<const std::size_t> rows);
/// Repeats a length-d vector into an [n x d] matrix.
Var tile_rows(Var v, std::size_t n);

/// Concatenation along the trailing axis.
Var concat(Var a, Var b);
Var reshape(Var x, Shape shape);

/// Softmax along the trailing axis of a rank-1 or rank-2 tensor.
Var softmax(Var x);

Var sum(Var x);
Var mean(Var x);

} // namespace condrnn::diff
