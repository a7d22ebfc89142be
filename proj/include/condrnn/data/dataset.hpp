#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "condrnn/cond/sensors.hpp"
#include "condrnn/diff/tensor.hpp"
#include "condrnn/dyn/head.hpp"

namespace condrnn::data {

using cond::ActiveSet;
using cond::SensorCatalog;
using dyn::TaskKind;

struct InstanceMeta {
    std::string id;
    /// Provenance, e.g. the engine an RUL window was cut from.
    std::string source;
    /// Split tag: train, val, finetune, test, or empty when unassigned.
    std::string split;
    /// Total operational life F for prognostics; 0 otherwise.
    double total_life = 0.0;
    /// Cycle index of the first row relative to the start of life.
    std::size_t offset = 0;
};

/// One multivariate series. `values` is [T x d] in raw units; columns of
/// inactive sensors are carried but ignored until imputation.
struct TimeSeriesInstance {
    diff::Tensor values;
    ActiveSet active;
    /// Class index for classification.
    std::size_t label = 0;
    /// Remaining useful life for regression, F - (offset + T).
    double rul = 0.0;
    InstanceMeta meta;

    std::size_t length() const { return values.shape()[0]; }
    std::size_t sensors() const { return values.shape()[1]; }
};

struct TaskSpec {
    TaskKind kind = TaskKind::Classification;
    /// K for classification, ignored for regression.
    std::size_t classes = 0;
};

enum class Normalization { ZScore, MinMax };

std::string to_string(TaskKind kind);
TaskKind parse_task(const std::string& s);
std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& s);

struct Dataset {
    std::string name;
    SensorCatalog catalog;
    TaskSpec task;
    Normalization normalization = Normalization::ZScore;
    std::vector<TimeSeriesInstance> instances;

    std::size_t size() const { return instances.size(); }
    /// Instances whose split tag equals `tag`, with the same catalog and task.
    Dataset subset(const std::string& tag) const;
    /// Same header, no instances.
    Dataset empty_like() const;
    /// Checks shapes, labels and active-set widths; throws IngestionError.
    void validate() const;
    /// 64-bit FNV-1a over the canonical serialization.
    std::uint64_t digest() const;
};

std::string hex_digest(std::uint64_t digest);

} // namespace condrnn::data
