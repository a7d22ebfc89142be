#include "condrnn/data/dataset.hpp"

#include <cstdio>

#include "condrnn/error.hpp"
#include "condrnn/hash.hpp"

namespace condrnn::data {

std::string to_string(TaskKind kind) {
    return kind == TaskKind::Classification ? "classification" : "regression";
}

TaskKind parse_task(const std::string& s) {
    if (s == "classification") return TaskKind::Classification;
    if (s == "regression") return TaskKind::Regression;
    throw ConfigError("unknown task kind '" + s + "'");
}

std::string to_string(Normalization n) { return n == Normalization::ZScore ? "zscore" : "minmax"; }

Normalization parse_normalization(const std::string& s) {
    if (s == "zscore") return Normalization::ZScore;
    if (s == "minmax") return Normalization::MinMax;
    throw ConfigError("unknown normalization '" + s + "'");
}

Dataset Dataset::subset(const std::string& tag) const {
    Dataset out = empty_like();
    for (const auto& inst : instances)
        if (inst.meta.split == tag) out.instances.push_back(inst);
    return out;
}

Dataset Dataset::empty_like() const {
    Dataset out;
    out.name = name;
    out.catalog = catalog;
    out.task = task;
    out.normalization = normalization;
    return out;
}

void Dataset::validate() const {
    const std::size_t d = catalog.size();
    if (d == 0) throw IngestionError("dataset has an empty sensor catalog");
    if (task.kind == TaskKind::Classification && task.classes < 2) {
        throw IngestionError("classification dataset needs at least two classes");
    }
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const std::string where = "instance " + std::to_string(i) + " ('" + inst.meta.id + "')";
        if (inst.values.rank() != 2 || inst.length() == 0) throw IngestionError(where + ": empty series");
        if (inst.sensors() != d) {
            throw IngestionError(where + ": " + std::to_string(inst.sensors()) + " columns, catalog has " +
                                 std::to_string(d));
        }
        if (inst.active.universe() != d) throw IngestionError(where + ": active set width mismatch");
        if (task.kind == TaskKind::Classification && inst.label >= task.classes) {
            throw IngestionError(where + ": label " + std::to_string(inst.label) + " >= K");
        }
        if (task.kind == TaskKind::Regression && inst.rul < 0.0) throw IngestionError(where + ": negative RUL");
    }
}

std::uint64_t Dataset::digest() const {
    Fnv1a64 h;
    h.update_str(name);
    h.update_u64(catalog.size());
    for (const auto& n : catalog.names()) h.update_str(n);
    h.update_str(to_string(task.kind));
    h.update_u64(task.classes);
    h.update_str(to_string(normalization));
    h.update_u64(instances.size());
    for (const auto& inst : instances) {
        h.update_str(inst.meta.id);
        h.update_str(inst.meta.source);
        h.update_str(inst.meta.split);
        h.update_f64(inst.meta.total_life);
        h.update_u64(inst.meta.offset);
        h.update_str(inst.active.to_string());
        h.update_u64(inst.label);
        h.update_f64(inst.rul);
        h.update_u64(inst.length());
        h.update_u64(inst.sensors());
        for (double v : inst.values.data()) h.update_f64(v);
    }
    return h.digest();
}

std::string hex_digest(std::uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

} // namespace condrnn::data
