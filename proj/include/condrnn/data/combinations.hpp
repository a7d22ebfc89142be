#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "condrnn/data/dataset.hpp"
#include "condrnn/diff/rng.hpp"

namespace condrnn::data {

/// Sensor combinations seen during training: `base` sets each mask
/// round(f_tr d) sensors; every base set spawns derived sets that mask
/// round(f_tr d / 2) further sensors. `all()` lists base sets first, then
/// derived sets grouped by parent.
struct CombinationPlan {
    std::vector<ActiveSet> base;
    std::vector<ActiveSet> derived;
    /// derived[i] was produced from base[parent[i]].
    std::vector<std::size_t> parent;
    double f_tr = 0.0;
    std::uint64_t seed = 0;

    std::vector<ActiveSet> all() const;
    std::size_t size() const { return base.size() + derived.size(); }
    bool contains(const ActiveSet& s) const;
};

inline constexpr std::size_t kMaxGenerationRetries = 10000;
inline constexpr std::size_t kMaxPlanAttempts = 200;

CombinationPlan generate_combinations(std::size_t d, double f_tr, std::size_t n_base, std::size_t n_total,
                                      std::uint64_t seed);

/// Masks round(f_te d) sensors, rejecting masks found in `plan` or in
/// `exclude`. Throws GenerationError after kMaxGenerationRetries.
ActiveSet sample_test_combination(std::size_t d, double f_te, const CombinationPlan& plan, diff::RngStream& rng,
                                  const std::vector<ActiveSet>& exclude = {});

/// `count` distinct unseen combinations.
std::vector<ActiveSet> sample_test_combinations(std::size_t d, double f_te, const CombinationPlan& plan,
                                                std::size_t count, diff::RngStream rng);

/// Round-robin assignment of plan combinations over a shuffled instance
/// order. Each instance's active set becomes its combination intersected
/// with the sensors it natively has. Returns the combination index per
/// instance.
std::vector<std::size_t> assign_combinations(Dataset& ds, const CombinationPlan& plan, diff::RngStream rng);

/// Replaces every instance's active set by `set` (intersected with its
/// native sensors).
Dataset remask(const Dataset& ds, const ActiveSet& set);

} // namespace condrnn::data
