#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "condrnn/bench/benchmark.hpp"

namespace condrnn::bench {

/// Mean and spread over seeds for one (variant, f_tr, f_te, mode) cell.
struct Aggregate {
    double mean = 0.0;
    double std = 0.0;
    std::size_t seeds = 0;
    std::size_t failures = 0;
    std::vector<double> values;
};

using CellKey = std::tuple<train::Variant, double, double, Mode>;

std::map<CellKey, Aggregate> aggregate(const BenchReport& report);

/// Welch p-value of GRU-CM against GRU for every (f_tr, f_te, mode) where
/// both exist.
std::map<std::tuple<double, double, Mode>, double> welch_gru_cm_vs_gru(const BenchReport& report);

/// Aligned text table: one row per variant, a zero-shot and a fine-tune
/// block per f_tr, other modes after them, and a single all-sensors column.
void write_table(std::ostream& os, const BenchReport& report);

/// One JSON object per cell and seed:
/// {dataset, variant, f_tr, f_te, mode, seed, metric, value, runtime_s}.
void write_jsonl(std::ostream& os, const BenchReport& report);
void write_csv(std::ostream& os, const BenchReport& report);
void write_predictions(std::ostream& os, const BenchReport& report);

/// FNV-1a over the cell records (runtime excluded), the data digest and the
/// config echo.
std::uint64_t report_digest(const BenchReport& report);

/// Writes report.jsonl, report.csv (optional), predictions.jsonl,
/// table.txt, config.txt and digest.txt under `dir`.
void save_report(const BenchReport& report, const std::filesystem::path& dir, bool csv);

} // namespace condrnn::bench
