#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "condrnn/data/combinations.hpp"
#include "condrnn/train/trainer.hpp"

namespace condrnn::bench {

enum class Mode { ZeroShot, FineTune, Overlap, Scratch };

std::string to_string(Mode m);
/// Accepts zero-shot, fine-tune, overlap, scratch.
Mode parse_mode(const std::string& s);

/// Outcome on one test combination.
struct ComboResult {
    cond::ActiveSet combination;
    /// Error rate in percent or RMSE in RUL units.
    double value = 0.0;
    /// Predicted label or denormalized RUL per test instance.
    std::vector<double> predictions;
    /// Overlap mode: index into plan.all() of the selected training
    /// combination.
    std::optional<std::size_t> selected;
};

/// "error_rate" or "rmse".
std::string metric_name(dyn::TaskKind kind);

/// Scores a model on `test` exactly as given.
ComboResult score(train::Model& model, const data::Dataset& test, const data::NormStats& stats);

/// Ground truth per test instance, in the units of ComboResult::predictions.
std::vector<double> targets(const data::Dataset& test);

/// Direct inference under each combination. The checkpoint is not touched.
std::vector<ComboResult> zero_shot_eval(const train::Checkpoint& ckpt, const data::Dataset& test,
                                        const std::vector<cond::ActiveSet>& combinations);

/// Fine-tunes a copy of the checkpoint on the fine-tune split re-masked to
/// each combination, then scores. An empty fine-tune split falls back to
/// zero-shot with a warning.
std::vector<ComboResult> fine_tune_eval(const train::Checkpoint& ckpt, const data::Dataset& finetune,
                                        const data::Dataset& test,
                                        const std::vector<cond::ActiveSet>& combinations,
                                        const train::TrainConfig& config);

/// Index into plan.all() maximizing |A ∩ B|, then Jaccard, then the lower
/// index.
std::size_t select_overlap_combination(const data::CombinationPlan& plan, const cond::ActiveSet& test);

/// Fine-tunes on the training instances assigned to the best-overlapping
/// training combination, re-masked to the test combination.
std::vector<ComboResult> overlap_fine_tune_eval(const train::Checkpoint& ckpt, const data::Dataset& train_split,
                                                const std::vector<std::size_t>& assignment,
                                                const data::CombinationPlan& plan, const data::Dataset& test,
                                                const std::vector<cond::ActiveSet>& combinations,
                                                const train::TrainConfig& config);

/// Trains a fresh GRU on the fine-tune split alone (re-masked to each
/// combination) and scores it.
std::vector<ComboResult> scratch_eval(const data::Dataset& finetune, const data::Dataset& test,
                                      const data::NormStats& stats,
                                      const std::vector<cond::ActiveSet>& combinations,
                                      const train::TrainConfig& config);

} // namespace condrnn::bench
