#include "condrnn/data/preprocess.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "condrnn/error.hpp"

namespace condrnn::data {

namespace {

double spread_or_one(double s) { return s < kDegenerateSpread ? 1.0 : s; }

} // namespace

double NormStats::normalize(std::size_t j, double raw) const {
    if (mode == Normalization::ZScore) return (raw - mean[j]) / spread_or_one(std[j]);
    return (raw - min[j]) / spread_or_one(max[j] - min[j]);
}

double NormStats::imputed_value(std::size_t j) const {
    if (mode == Normalization::ZScore) return 0.0;
    return normalize(j, mean[j]);
}

NormStats compute_stats(const Dataset& train) {
    const std::size_t d = train.catalog.size();
    NormStats s;
    s.mode = train.normalization;
    s.mean.assign(d, 0.0);
    s.std.assign(d, 0.0);
    s.min.assign(d, std::numeric_limits<double>::infinity());
    s.max.assign(d, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> count(d, 0);

    for (const auto& inst : train.instances) {
        const std::size_t t_len = inst.length();
        for (std::size_t j = 0; j < d; ++j) {
            if (!inst.active.contains(j)) continue;
            for (std::size_t t = 0; t < t_len; ++t) {
                const double v = inst.values.at(t, j);
                s.mean[j] += v;
                s.min[j] = std::min(s.min[j], v);
                s.max[j] = std::max(s.max[j], v);
            }
            count[j] += t_len;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (count[j] == 0) {
            throw CoverageError("sensor '" + train.catalog.name(j) + "' is never active in the training split");
        }
        s.mean[j] /= static_cast<double>(count[j]);
    }
    // Second pass for a numerically stable variance.
    for (const auto& inst : train.instances) {
        for (std::size_t j = 0; j < d; ++j) {
            if (!inst.active.contains(j)) continue;
            for (std::size_t t = 0; t < inst.length(); ++t) {
                const double dv = inst.values.at(t, j) - s.mean[j];
                s.std[j] += dv * dv;
            }
        }
    }
    for (std::size_t j = 0; j < d; ++j) s.std[j] = std::sqrt(s.std[j] / static_cast<double>(count[j]));

    if (train.task.kind == TaskKind::Regression && !train.instances.empty()) {
        s.target_min = std::numeric_limits<double>::infinity();
        s.target_max = -std::numeric_limits<double>::infinity();
        for (const auto& inst : train.instances) {
            s.target_min = std::min(s.target_min, inst.rul);
            s.target_max = std::max(s.target_max, inst.rul);
        }
        if (!(s.target_max > s.target_min)) s.target_max = s.target_min + 1.0;
    }
    return s;
}

diff::Tensor mean_impute(const TimeSeriesInstance& x, const NormStats& stats) {
    const std::size_t t_len = x.length(), d = x.sensors();
    if (stats.sensors() != d) throw DimensionError("mean_impute: statistics cover a different sensor count");
    diff::Tensor out(diff::Shape{t_len, d});
    for (std::size_t j = 0; j < d; ++j) {
        if (x.active.contains(j)) {
            for (std::size_t t = 0; t < t_len; ++t) out.at(t, j) = stats.normalize(j, x.values.at(t, j));
        } else {
            const double fill = stats.imputed_value(j);
            for (std::size_t t = 0; t < t_len; ++t) out.at(t, j) = fill;
        }
    }
    return out;
}

std::vector<TimeSeriesInstance> window(const TimeSeriesInstance& x, std::size_t length, std::size_t shift) {
    if (length == 0 || shift == 0) throw ConfigError("window length and shift must be positive");
    std::vector<TimeSeriesInstance> out;
    const std::size_t t_len = x.length(), d = x.sensors();
    if (t_len < length) {
        spdlog::warn("window: series '{}' has {} steps < window length {}; skipped", x.meta.id, t_len, length);
        return out;
    }
    const std::size_t count = (t_len - length) / shift + 1;
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * shift;
        TimeSeriesInstance win;
        std::vector<double> vals(x.values.data().begin() + static_cast<std::ptrdiff_t>(start * d),
                                 x.values.data().begin() + static_cast<std::ptrdiff_t>((start + length) * d));
        win.values = diff::Tensor(diff::Shape{length, d}, std::move(vals));
        win.active = x.active;
        win.label = x.label;
        win.meta = x.meta;
        win.meta.id = x.meta.id + "#w" + std::to_string(w);
        win.meta.source = x.meta.source.empty() ? x.meta.id : x.meta.source;
        win.meta.offset = x.meta.offset + start;
        // Cycle count at the window's last row.
        win.rul = x.meta.total_life - static_cast<double>(win.meta.offset + length);
        out.push_back(std::move(win));
    }
    return out;
}

Dataset window_dataset(const Dataset& ds, std::size_t length, std::size_t shift) {
    Dataset out = ds.empty_like();
    for (const auto& inst : ds.instances) {
        auto ws = window(inst, length, shift);
        for (auto& w : ws) out.instances.push_back(std::move(w));
    }
    return out;
}

std::array<std::size_t, 4> split_sizes(std::size_t n, const std::array<double, 4>& fractions) {
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) throw ConfigError("split fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
    std::array<std::size_t, 4> sizes{};
    std::array<double, 4> rem{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double exact = fractions[k] * static_cast<double>(n);
        // Guard against 0.4 * 100 evaluating to 39.999...
        sizes[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[k] = exact - static_cast<double>(sizes[k]);
        assigned += sizes[k];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 4; ++k)
            if (rem[k] > rem[best]) best = k;
        ++sizes[best];
        rem[best] = -1.0;
        ++assigned;
    }
    return sizes;
}

Splits split(const Dataset& ds, const std::array<double, 4>& fractions, diff::RngStream rng) {
    const std::size_t n = ds.size();
    const auto sizes = split_sizes(n, fractions);

    // Ordered instance list: grouped by class (each class shuffled) when
    // stratifying, a single shuffled block otherwise.
    std::vector<std::size_t> order;
    bool stratify = ds.task.kind == TaskKind::Classification;
    if (stratify) {
        std::map<std::size_t, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[ds.instances[i].label].push_back(i);
        for (auto& [label, members] : by_class) {
            if (members.size() < sizes.size()) {
                spdlog::warn("split: class {} has {} instances (< {} splits); falling back to an unstratified split",
                             label, members.size(), sizes.size());
                stratify = false;
                break;
            }
        }
        if (stratify) {
            for (auto& [label, members] : by_class) {
                rng.split(static_cast<std::uint64_t>(label)).shuffle(std::span(members));
                order.insert(order.end(), members.begin(), members.end());
            }
        }
    }
    if (!stratify) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.split("unstratified").shuffle(std::span(order));
    }

    // Deal split labels so that every prefix of `order` receives each split
    // in proportion to its size; class blocks then get proportional shares.
    std::array<std::size_t, 4> given{};
    std::vector<std::size_t> label_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        std::size_t best = 0;
        double best_deficit = -1e300;
        for (std::size_t k = 0; k < 4; ++k) {
            if (given[k] >= sizes[k]) continue;
            const double deficit =
                static_cast<double>(sizes[k]) * static_cast<double>(pos + 1) / static_cast<double>(n) -
                static_cast<double>(given[k]);
            if (deficit > best_deficit) {
                best_deficit = deficit;
                best = k;
            }
        }
        ++given[best];
        label_of[pos] = best;
    }

    std::array<Dataset, 4> parts{ds.empty_like(), ds.empty_like(), ds.empty_like(), ds.empty_like()};
    std::vector<std::size_t> split_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) split_of[order[pos]] = label_of[pos];
    // Keep the original instance order inside each part.
    for (std::size_t i = 0; i < n; ++i) {
        auto inst = ds.instances[i];
        inst.meta.split = kSplitNames[split_of[i]];
        parts[split_of[i]].instances.push_back(std::move(inst));
    }
    return Splits{std::move(parts[0]), std::move(parts[1]), std::move(parts[2]), std::move(parts[3])};
}

Splits splits_from_tags(const Dataset& ds) {
    return Splits{ds.subset("train"), ds.subset("val"), ds.subset("finetune"), ds.subset("test")};
}

} // namespace condrnn::data
