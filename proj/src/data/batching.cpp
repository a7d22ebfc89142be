#include "condrnn/data/batching.hpp"

#include <algorithm>

#include "condrnn/error.hpp"

namespace condrnn::data {

BatchStream::BatchStream(const Dataset& split, const NormStats& stats, std::size_t batch_size,
                         diff::RngStream rng)
    : batch_size_(batch_size), rng_(rng) {
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    imputed_.reserve(split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
        const auto& inst = split.instances[i];
        imputed_.push_back(mean_impute(inst, stats));
        labels_.push_back(inst.label);
        targets_.push_back(split.task.kind == TaskKind::Regression
                               ? dyn::normalize_rul(inst.rul, stats.target_min, stats.target_max)
                               : 0.0);
        auto key = std::make_pair(inst.active.to_string(), inst.length());
        buckets_[key].push_back(i);
        bucket_sets_.emplace(key, inst.active);
    }
}

MiniBatch BatchStream::assemble(const ActiveSet& active, const std::vector<std::size_t>& members) const {
    MiniBatch b;
    b.active = active;
    b.members = members;
    const auto& first = imputed_[members.front()];
    const std::size_t t_len = first.shape()[0], d = first.shape()[1];
    b.inputs = diff::Tensor(diff::Shape{members.size(), t_len, d});
    auto out = b.inputs.data();
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& src = imputed_[members[k]];
        std::copy(src.data().begin(), src.data().end(), out.begin() + static_cast<std::ptrdiff_t>(k * t_len * d));
        b.labels.push_back(labels_[members[k]]);
        b.targets.push_back(targets_[members[k]]);
    }
    return b;
}

std::vector<MiniBatch> BatchStream::next_epoch() {
    auto epoch_rng = rng_.split(static_cast<std::uint64_t>(epoch_++));
    std::vector<MiniBatch> batches;
    for (auto& [key, members] : buckets_) {
        std::vector<std::size_t> shuffled = members;
        epoch_rng.shuffle(std::span(shuffled));
        for (std::size_t start = 0; start < shuffled.size(); start += batch_size_) {
            const std::size_t end = std::min(shuffled.size(), start + batch_size_);
            batches.push_back(assemble(bucket_sets_.at(key),
                                       std::vector<std::size_t>(shuffled.begin() + static_cast<std::ptrdiff_t>(start),
                                                                shuffled.begin() + static_cast<std::ptrdiff_t>(end))));
        }
    }
    epoch_rng.shuffle(std::span(batches));
    return batches;
}

std::vector<MiniBatch> BatchStream::ordered() const {
    std::vector<MiniBatch> batches;
    for (const auto& [key, members] : buckets_) {
        for (std::size_t start = 0; start < members.size(); start += batch_size_) {
            const std::size_t end = std::min(members.size(), start + batch_size_);
            batches.push_back(assemble(bucket_sets_.at(key),
                                       std::vector<std::size_t>(members.begin() + static_cast<std::ptrdiff_t>(start),
                                                                members.begin() + static_cast<std::ptrdiff_t>(end))));
        }
    }
    return batches;
}

std::vector<MiniBatch> make_batches(const Dataset& split, const NormStats& stats, std::size_t batch_size,
                                    diff::RngStream rng) {
    BatchStream stream(split, stats, batch_size, rng);
    return stream.next_epoch();
}

} // namespace condrnn::data
