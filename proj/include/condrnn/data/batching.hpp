#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "condrnn/data/preprocess.hpp"

namespace condrnn::data {

/// Instances sharing one active set and one length.
struct MiniBatch {
    ActiveSet active;
    /// [B x T x d] normalized, mean-imputed inputs.
    diff::Tensor inputs;
    std::vector<std::size_t> labels;
    /// Min-max normalized RUL targets (regression only).
    std::vector<double> targets;
    /// Indices into the source split.
    std::vector<std::size_t> members;

    std::size_t size() const { return members.size(); }
    std::size_t steps() const { return inputs.shape()[1]; }
};

/// Homogeneous mini-batch source over one split. Instances are bucketed by
/// (active set, length); each epoch shuffles inside every bucket, cuts
/// batches (keeping the last partial one) and shuffles the batch order.
class BatchStream {
public:
    BatchStream(const Dataset& split, const NormStats& stats, std::size_t batch_size, diff::RngStream rng);

    std::vector<MiniBatch> next_epoch();
    /// Deterministic batches in bucket order, no shuffling (evaluation).
    std::vector<MiniBatch> ordered() const;

    std::size_t instances() const { return imputed_.size(); }
    std::size_t buckets() const { return buckets_.size(); }
    std::size_t epoch() const { return epoch_; }

private:
    MiniBatch assemble(const ActiveSet& active, const std::vector<std::size_t>& members) const;

    std::vector<diff::Tensor> imputed_;
    std::vector<std::size_t> labels_;
    std::vector<double> targets_;
    std::map<std::pair<std::string, std::size_t>, std::vector<std::size_t>> buckets_;
    std::map<std::pair<std::string, std::size_t>, ActiveSet> bucket_sets_;
    std::size_t batch_size_;
    diff::RngStream rng_;
    std::size_t epoch_ = 0;
};

/// One-shot convenience wrapper: the batches of the next epoch.
std::vector<MiniBatch> make_batches(const Dataset& split, const NormStats& stats, std::size_t batch_size,
                                    diff::RngStream rng);

} // namespace condrnn::data
