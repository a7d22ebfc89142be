#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "condrnn/bench/evaluation.hpp"

namespace condrnn::bench {

struct BenchConfig {
    std::vector<train::Variant> variants{train::Variant::Gru, train::Variant::GruSe, train::Variant::GruCm,
                                         train::Variant::GruA};
    std::vector<double> f_tr{0.25, 0.4};
    std::vector<double> f_te{0.1, 0.25, 0.4, 0.5};
    std::vector<Mode> modes{Mode::ZeroShot, Mode::FineTune};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t combinations_per_f_te = 5;
    std::size_t base_combinations = 16;
    std::size_t total_combinations = 64;
    std::array<double, 4> fractions = data::kDefaultFractions;
    /// Regression series are cut into windows after splitting; 0 keeps whole series.
    std::size_t window_length = 100;
    std::size_t window_shift = 5;
    train::TrainConfig train;
    std::size_t jobs = 1;
    /// Per-job completion markers live here; empty disables resume.
    std::filesystem::path work_dir;
    /// Keep per-instance predictions in the report.
    bool keep_predictions = true;

    std::string echo() const;
    void validate() const;
};

/// One (variant, f_tr, f_te, mode, seed) cell: the metric averaged over the
/// sampled test combinations. GRU-A cells use f_tr = f_te = 0 and mode
/// zero-shot with every sensor available.
struct CellRecord {
    std::string dataset;
    train::Variant variant = train::Variant::Gru;
    double f_tr = 0.0;
    double f_te = 0.0;
    Mode mode = Mode::ZeroShot;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
    double runtime_s = 0.0;
    std::size_t combinations = 0;
    /// Empty on success, the error message otherwise.
    std::string failure;
};

struct PredictionRecord {
    train::Variant variant = train::Variant::Gru;
    double f_tr = 0.0;
    double f_te = 0.0;
    Mode mode = Mode::ZeroShot;
    std::uint64_t seed = 0;
    std::string combination;
    std::string instance;
    double prediction = 0.0;
    double target = 0.0;
};

struct BenchReport {
    std::string dataset;
    std::string data_digest;
    std::string config_echo;
    std::vector<CellRecord> cells;
    std::vector<PredictionRecord> predictions;
    /// Test combinations checked against every training mask.
    std::size_t unseen_checks = 0;
};

/// Everything one (seed, f_tr) pair needs before training. Derived from
/// (dataset, seed, f_tr) alone, so separate train and eval invocations agree.
struct Experiment {
    std::uint64_t seed = 0;
    double f_tr = 0.0;
    data::Splits splits;
    /// Statistics of the unmasked training split.
    data::NormStats stats;
    data::CombinationPlan plan;
    data::Dataset train_masked;
    data::Dataset val_masked;
    /// Plan index assigned to each training instance.
    std::vector<std::size_t> train_assignment;
};

/// Split tags are used when every instance carries one; otherwise the split
/// is drawn from the seed. Regression splits are windowed after splitting, so
/// all windows of one series land in the same split.
Experiment prepare_experiment(const data::Dataset& ds, std::uint64_t seed, double f_tr,
                              const std::array<double, 4>& fractions = data::kDefaultFractions,
                              std::size_t base_combinations = 16, std::size_t total_combinations = 64,
                              std::size_t window_length = 100, std::size_t window_shift = 5);

/// Unseen test combinations for one f_te, keyed by (seed, f_tr, f_te).
std::vector<cond::ActiveSet> test_combinations(const Experiment& ex, double f_te, std::size_t count);

/// Cells a complete run produces. Scratch cells exist only for GRU; GRU-A
/// contributes one cell per seed.
std::size_t expected_cells(const BenchConfig& config);

/// Full grid on `ds`. Split tags, when present on every instance, are used
/// as given; otherwise each seed draws its own stratified split. Failing
/// jobs are recorded on their cells and the run continues.
BenchReport run_benchmark(const data::Dataset& ds, const BenchConfig& config);

} // namespace condrnn::bench
