#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condrnn/data/preprocess.hpp"
#include "condrnn/train/model.hpp"

namespace condrnn::train {

/// Immutable snapshot of a trained model plus everything needed to run
/// inference on raw data.
struct Checkpoint {
    Variant variant = Variant::GruCm;
    ModelConfig model;
    cond::SensorCatalog catalog;
    data::NormStats stats;
    std::map<std::string, diff::Tensor> params;
    double best_val_loss = 0.0;
    std::size_t epoch = 0;
    std::string config_echo;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Binary container, all integers little-endian:
///   magic "CONDRNN1" | u32 version | u32 variant tag | u64 catalog digest
///   u32 n, then n x (u32 key length, key, u32 rank, rank x u64 extent,
///                    f64 payload)
///   u64 FNV-1a of every preceding byte
/// Entries whose key starts with "meta." hold configuration and statistics;
/// the rest are model parameters keyed by module path.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
/// Throws CheckpointError on bad magic, version, digest or structure.
Checkpoint deserialize(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// When `expected` is given, a checkpoint of another variant is rejected.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::optional<Variant> expected = std::nullopt);

/// Digest of the serialized form; equal digests mean identical checkpoints.
std::uint64_t checkpoint_digest(const Checkpoint& ckpt);

/// Rebuilds the model and loads the parameters.
Model instantiate(const Checkpoint& ckpt);

/// Captures the current parameters of `model`.
Checkpoint snapshot(const Model& model, const cond::SensorCatalog& catalog, const data::NormStats& stats);

} // namespace condrnn::train
