#include "condrnn/data/combinations.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>

#include "condrnn/error.hpp"

namespace condrnn::data {

namespace {

/// Masks `k` sensors chosen uniformly without replacement from the active
/// members of `from`.
ActiveSet mask_random(const ActiveSet& from, std::size_t k, diff::RngStream& rng) {
    auto idx = from.indices();
    if (k >= idx.size()) throw GenerationError("cannot mask all available sensors");
    // Partial Fisher-Yates: the first k entries become the masked sensors.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    auto bits = from.bits();
    for (std::size_t i = 0; i < k; ++i) bits[idx[i]] = 0;
    return ActiveSet(std::move(bits));
}

std::optional<CombinationPlan> try_generate(std::size_t d, std::size_t masked, std::size_t extra, std::size_t n_base,
                                            std::size_t per_base, const diff::RngStream& rng) {
    CombinationPlan plan;
    auto base_rng = rng.split("base");
    auto derived_rng = rng.split("derived");
    std::set<ActiveSet> seen;
    const ActiveSet full = ActiveSet::all(d);
    auto draw = [&](const ActiveSet& from, std::size_t k, diff::RngStream& r) -> std::optional<ActiveSet> {
        for (std::size_t tries = 0; tries < kMaxGenerationRetries; ++tries) {
            ActiveSet s = mask_random(from, k, r);
            if (seen.insert(s).second) return s;
        }
        return std::nullopt;
    };
    for (std::size_t b = 0; b < n_base; ++b) {
        auto s = draw(full, masked, base_rng);
        if (!s) return std::nullopt;
        plan.base.push_back(std::move(*s));
    }
    for (std::size_t b = 0; b < n_base; ++b) {
        for (std::size_t k = 0; k < per_base; ++k) {
            auto s = draw(plan.base[b], extra, derived_rng);
            if (!s) return std::nullopt;
            plan.derived.push_back(std::move(*s));
            plan.parent.push_back(b);
        }
    }
    return plan;
}

} // namespace

std::vector<ActiveSet> CombinationPlan::all() const {
    std::vector<ActiveSet> out = base;
    out.insert(out.end(), derived.begin(), derived.end());
    return out;
}

bool CombinationPlan::contains(const ActiveSet& s) const {
    return std::find(base.begin(), base.end(), s) != base.end() ||
           std::find(derived.begin(), derived.end(), s) != derived.end();
}

CombinationPlan generate_combinations(std::size_t d, double f_tr, std::size_t n_base, std::size_t n_total,
                                      std::uint64_t seed) {
    if (!(f_tr > 0.0 && f_tr < 1.0)) throw ConfigError("f_tr must lie in (0, 1)");
    if (n_base == 0 || n_total < n_base || (n_total - n_base) % n_base != 0) {
        throw ConfigError("n_total - n_base must be a non-negative multiple of n_base");
    }
    const std::size_t masked = cond::masked_count(f_tr, d);
    const std::size_t extra = cond::masked_count(f_tr / 2.0, d);
    if (masked < 1 || d - masked < 1) {
        throw ConfigError("f_tr = " + std::to_string(f_tr) + " with d = " + std::to_string(d) +
                          " leaves no masked or no available sensor");
    }
    if (n_total > n_base && (extra < 1 || d - masked - extra < 1)) {
        throw GenerationError("derived combinations cannot mask " + std::to_string(extra) +
                              " additional sensors with d = " + std::to_string(d));
    }
    const std::size_t per_base = (n_total - n_base) / n_base;

    const diff::RngStream root(seed);
    for (std::size_t attempt = 0; attempt < kMaxPlanAttempts; ++attempt) {
        // A derived set can be blocked by earlier picks; restart the whole plan.
        auto plan = try_generate(d, masked, extra, n_base, per_base,
                                 attempt == 0 ? root : root.split("attempt").split(attempt));
        if (plan) {
            plan->f_tr = f_tr;
            plan->seed = seed;
            return std::move(*plan);
        }
    }
    throw GenerationError("could not generate " + std::to_string(n_total) + " distinct combinations with d = " +
                          std::to_string(d) + " after " + std::to_string(kMaxPlanAttempts) + " attempts");
}

ActiveSet sample_test_combination(std::size_t d, double f_te, const CombinationPlan& plan, diff::RngStream& rng,
                                  const std::vector<ActiveSet>& exclude) {
    if (!(f_te >= 0.0 && f_te < 1.0)) throw ConfigError("f_te must lie in [0, 1)");
    const std::size_t masked = cond::masked_count(f_te, d);
    if (masked >= d) throw ConfigError("f_te masks every sensor");
    const ActiveSet full = ActiveSet::all(d);
    for (std::size_t tries = 0; tries < kMaxGenerationRetries; ++tries) {
        ActiveSet s = mask_random(full, masked, rng);
        if (plan.contains(s)) continue;
        if (std::find(exclude.begin(), exclude.end(), s) != exclude.end()) continue;
        return s;
    }
    throw GenerationError("no unseen test combination found for f_te = " + std::to_string(f_te) +
                          " after " + std::to_string(kMaxGenerationRetries) + " draws");
}

std::vector<ActiveSet> sample_test_combinations(std::size_t d, double f_te, const CombinationPlan& plan,
                                                std::size_t count, diff::RngStream rng) {
    std::vector<ActiveSet> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_test_combination(d, f_te, plan, rng, out));
    return out;
}

std::vector<std::size_t> assign_combinations(Dataset& ds, const CombinationPlan& plan, diff::RngStream rng) {
    const auto combos = plan.all();
    if (combos.empty()) throw ContractError("assign_combinations: empty plan");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    std::vector<std::size_t> assignment(ds.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t i = order[pos];
        assignment[i] = pos % combos.size();
        ds.instances[i].active = ds.instances[i].active.intersect(combos[assignment[i]]);
    }
    return assignment;
}

Dataset remask(const Dataset& ds, const ActiveSet& set) {
    Dataset out = ds;
    for (auto& inst : out.instances) inst.active = inst.active.intersect(set);
    return out;
}

} // namespace condrnn::data
