#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "condrnn/data/dataset.hpp"
#include "condrnn/diff/rng.hpp"

namespace condrnn::data {

/// Per-sensor statistics over the active cells of a training split, plus
/// the target range used for RUL normalization.
struct NormStats {
    Normalization mode = Normalization::ZScore;
    std::vector<double> mean;
    /// Population standard deviation (divide by count).
    std::vector<double> std;
    std::vector<double> min;
    std::vector<double> max;
    double target_min = 0.0;
    double target_max = 1.0;

    std::size_t sensors() const { return mean.size(); }
    /// Normalized value of a raw reading of sensor j.
    double normalize(std::size_t j, double raw) const;
    /// Normalized training mean of sensor j (the imputation constant).
    double imputed_value(std::size_t j) const;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Spreads below this are treated as 1 when dividing.
inline constexpr double kDegenerateSpread = 1e-8;

/// Statistics from the active cells of `train`. Throws CoverageError naming
/// any sensor that is never active.
NormStats compute_stats(const Dataset& train);

/// [T x d] normalized series; inactive columns hold the normalized training
/// mean (exactly 0 under z-scoring).
diff::Tensor mean_impute(const TimeSeriesInstance& x, const NormStats& stats);

/// Overlapping windows starting at 0, shift, 2 shift, ...; each window's RUL
/// is F minus the cycle index of its last row. Series shorter than `length`
/// yield no windows (logged).
std::vector<TimeSeriesInstance> window(const TimeSeriesInstance& x, std::size_t length = 100,
                                       std::size_t shift = 5);
/// Windows every instance of a dataset; split tags are preserved.
Dataset window_dataset(const Dataset& ds, std::size_t length, std::size_t shift);

struct Splits {
    Dataset train;
    Dataset val;
    Dataset finetune;
    Dataset test;
};

inline constexpr std::array<const char*, 4> kSplitNames{"train", "val", "finetune", "test"};
inline constexpr std::array<double, 4> kDefaultFractions{0.40, 0.10, 0.10, 0.40};

/// Exact split sizes by largest remainder (N = 100 -> 40/10/10/40).
std::array<std::size_t, 4> split_sizes(std::size_t n, const std::array<double, 4>& fractions);

/// Disjoint instance-level partition, stratified by class for
/// classification. Falls back to an unstratified split (with a warning) when
/// a class has fewer instances than there are splits.
Splits split(const Dataset& ds, const std::array<double, 4>& fractions, diff::RngStream rng);

/// Splits from existing split tags (e.g. a manifest with per-split files).
Splits splits_from_tags(const Dataset& ds);

} // namespace condrnn::data
