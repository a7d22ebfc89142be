#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "condrnn/data/dataset.hpp"

namespace condrnn::data {

/// Directory layout:
///   manifest.json   {format, version, name, sensors, task, num_classes,
///                    normalization, target_stats, reference?, files}
///   <split>.jsonl   one {id, active, target, values, ...} object per line
/// `files` maps split tags (train/val/finetune/test, or "all") to record
/// files. Values are raw, pre-normalization readings.
inline constexpr const char* kManifestFormat = "condrnn-dataset";
inline constexpr int kManifestVersion = 1;

/// Writes one record file per split tag present (untagged instances go to
/// all.jsonl).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir,
                  const std::optional<std::string>& reference = std::nullopt);

/// Throws IngestionError with file/line context on any problem.
Dataset load_dataset(const std::filesystem::path& dir);

struct KnownShape {
    std::size_t sensors;
    TaskKind task;
    std::size_t classes;
    std::size_t instances;
};

/// Published shapes of the public benchmarks (DSADS, HAR, Turbofan).
std::optional<KnownShape> known_shape(const std::string& reference);

/// Throws IngestionError when `ds` disagrees with the known shape.
void check_known_shape(const Dataset& ds, const std::string& reference);

} // namespace condrnn::data
