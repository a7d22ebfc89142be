#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "condrnn/data/batching.hpp"
#include "condrnn/train/checkpoint.hpp"
#include "condrnn/train/optim.hpp"

namespace condrnn::train {

struct TrainConfig {
    Variant variant = Variant::GruCm;
    /// Sensors, task and classes are filled in from the data.
    ModelConfig model;
    std::size_t max_epochs = 150;
    std::size_t batch_size = 64;
    std::size_t patience = 20;
    std::size_t finetune_epochs = 50;
    std::size_t finetune_batch_size = 32;
    std::size_t finetune_patience = 10;
    double finetune_holdout = 0.1;
    double embedding_lr = 5e-4;
    AdamConfig adam;
    std::uint64_t seed = 1;

    /// Flat key=value lines, one per field.
    std::string echo() const;
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
    bool diverged = false;
};

/// Loss of `model` on a prepared batch.
diff::Var batch_loss(diff::Tape& tape, Model& model, const data::MiniBatch& batch, bool training,
                     diff::RngStream& rng);

/// Mean per-instance loss over a split, inference mode.
double evaluate_loss(Model& model, const data::Dataset& split, const data::NormStats& stats,
                     std::size_t batch_size = 64);

/// One optimizer step: plain SGD on embeddings and Adam on everything else.
/// Gradients are cleared afterwards.
void apply_step(Model& model, AdamState& adam, const TrainConfig& config);

/// Fits a fresh model. GRU-A instances are unmasked first.
TrainResult train(const data::Dataset& train_split, const data::Dataset& val_split, const data::NormStats& stats,
                  const TrainConfig& config);

/// Continues training from `ckpt` on instances sharing one active set, with
/// early stopping on a held-out tenth. The starting point counts as epoch
/// 0, so the result never has a worse held-out loss than the input.
TrainResult fine_tune(const Checkpoint& ckpt, const data::Dataset& finetune_split, const TrainConfig& config);

/// Per-instance model outputs in instance order: K probabilities or one
/// normalized RUL.
std::vector<std::vector<double>> predict(Model& model, const data::Dataset& split, const data::NormStats& stats,
                                         std::size_t batch_size = 64);

/// Copy of `ds` with every sensor active.
data::Dataset unmask_all(const data::Dataset& ds);

} // namespace condrnn::train
