#include "condrnn/bench/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "condrnn/error.hpp"

namespace condrnn::bench {

using nlohmann::json;

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += fmt(xs[i]);
    }
    return s;
}

std::string num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

bool has_masked_variant(const BenchConfig& c) {
    return std::any_of(c.variants.begin(), c.variants.end(), train::uses_masking);
}

bool has_variant(const BenchConfig& c, train::Variant v) {
    return std::find(c.variants.begin(), c.variants.end(), v) != c.variants.end();
}

} // namespace

std::string BenchConfig::echo() const {
    std::ostringstream os;
    os << "variants=" << join(variants, [](train::Variant v) { return train::to_string(v); }) << '\n'
       << "f_tr=" << join(f_tr, num) << '\n'
       << "f_te=" << join(f_te, num) << '\n'
       << "modes=" << join(modes, [](Mode m) { return to_string(m); }) << '\n'
       << "seeds=" << join(seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
       << "combinations_per_f_te=" << combinations_per_f_te << '\n'
       << "base_combinations=" << base_combinations << '\n'
       << "total_combinations=" << total_combinations << '\n'
       << "fractions=" << join(std::vector<double>(fractions.begin(), fractions.end()), num) << '\n'
       << "window=" << window_length << '/' << window_shift << '\n';
    std::istringstream train_echo(train.echo());
    for (std::string line; std::getline(train_echo, line);) {
        if (line.rfind("variant=", 0) == 0 || line.rfind("seed=", 0) == 0) continue;
        os << line << '\n';
    }
    return os.str();
}

void BenchConfig::validate() const {
    if (variants.empty()) throw ConfigError("no variants selected");
    if (seeds.empty()) throw ConfigError("no seeds selected");
    if (has_masked_variant(*this)) {
        if (f_tr.empty() || f_te.empty() || modes.empty()) throw ConfigError("empty f_tr, f_te or mode list");
        if (combinations_per_f_te == 0) throw ConfigError("combinations_per_f_te must be positive");
    }
    for (double f : f_tr)
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("f_tr must lie in (0,1)");
    for (double f : f_te)
        if (!(f >= 0.0 && f < 1.0)) throw ConfigError("f_te must lie in [0,1)");
    if (jobs == 0) throw ConfigError("jobs must be positive");
    if (window_length > 0 && window_shift == 0) throw ConfigError("window shift must be positive");
    train.validate();
}

std::size_t expected_cells(const BenchConfig& c) {
    std::size_t masked = 0;
    for (auto v : c.variants) masked += train::uses_masking(v);
    std::size_t per_variant_modes = 0;
    std::size_t scratch = 0;
    for (auto m : c.modes) {
        if (m == Mode::Scratch) {
            scratch = has_variant(c, train::Variant::Gru) ? 1 : 0;
        } else {
            ++per_variant_modes;
        }
    }
    const std::size_t grid = c.f_tr.size() * c.f_te.size() * c.seeds.size();
    const std::size_t all_sensors = has_variant(c, train::Variant::GruA) ? c.seeds.size() : 0;
    return grid * (masked * per_variant_modes + scratch) + all_sensors;
}

namespace {

struct Job {
    std::string key;
    train::Variant variant;
    std::uint64_t seed;
    /// GRU-A jobs use the unmasked splits of the first f_tr.
    const Experiment* ex;
    bool all_sensors;
};

struct JobOutput {
    std::vector<CellRecord> cells;
    std::vector<PredictionRecord> predictions;
    bool ok = true;
};

json to_json(const CellRecord& c) {
    return {{"type", "cell"},    {"dataset", c.dataset}, {"variant", train::to_string(c.variant)},
            {"f_tr", c.f_tr},    {"f_te", c.f_te},       {"mode", to_string(c.mode)},
            {"seed", c.seed},    {"metric", c.metric},   {"value", c.value},
            {"runtime_s", c.runtime_s}, {"combinations", c.combinations}, {"failure", c.failure}};
}

json to_json(const PredictionRecord& p) {
    return {{"type", "pred"}, {"variant", train::to_string(p.variant)},
            {"f_tr", p.f_tr}, {"f_te", p.f_te}, {"mode", to_string(p.mode)}, {"seed", p.seed},
            {"combination", p.combination}, {"instance", p.instance},
            {"prediction", p.prediction}, {"target", p.target}};
}

std::optional<JobOutput> read_marker(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    JobOutput out;
    try {
        for (std::string line; std::getline(in, line);) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            if (j.at("type") == "cell") {
                CellRecord c;
                c.dataset = j.at("dataset");
                c.variant = train::parse_variant(j.at("variant"));
                c.f_tr = j.at("f_tr");
                c.f_te = j.at("f_te");
                c.mode = parse_mode(j.at("mode"));
                c.seed = j.at("seed");
                c.metric = j.at("metric");
                c.value = j.at("value");
                c.runtime_s = j.at("runtime_s");
                c.combinations = j.at("combinations");
                c.failure = j.at("failure");
                out.cells.push_back(std::move(c));
            } else {
                PredictionRecord p;
                p.variant = train::parse_variant(j.at("variant"));
                p.f_tr = j.at("f_tr");
                p.f_te = j.at("f_te");
                p.mode = parse_mode(j.at("mode"));
                p.seed = j.at("seed");
                p.combination = j.at("combination");
                p.instance = j.at("instance");
                p.prediction = j.at("prediction");
                p.target = j.at("target");
                out.predictions.push_back(std::move(p));
            }
        }
    } catch (const std::exception& e) {
        spdlog::warn("ignoring unreadable marker {}: {}", path.string(), e.what());
        return std::nullopt;
    }
    return out;
}

void write_marker(const std::filesystem::path& path, const JobOutput& out) {
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp);
        for (const auto& c : out.cells) os << to_json(c).dump() << '\n';
        for (const auto& p : out.predictions) os << to_json(p).dump() << '\n';
        if (!os) throw Error("cannot write marker " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class JobRunner {
public:
    JobRunner(const data::Dataset& ds, const BenchConfig& config,
              const std::map<const Experiment*, std::vector<std::vector<cond::ActiveSet>>>& combos)
        : ds_(ds), config_(config), combos_(combos) {}

    JobOutput run(const Job& job) const {
        JobOutput out;
        const auto t0 = std::chrono::steady_clock::now();
        train::TrainConfig cfg = config_.train;
        cfg.variant = job.variant;
        cfg.seed = job.seed;
        const auto& splits = job.ex->splits;
        const auto& stats = job.ex->stats;

        if (job.all_sensors) {
            const auto result = train::train(splits.train, splits.val, stats, cfg);
            const double train_s = seconds_since(t0);
            const auto t1 = std::chrono::steady_clock::now();
            const auto all = cond::ActiveSet::all(ds_.catalog.size());
            const auto r = zero_shot_eval(result.checkpoint, splits.test, {all});
            emit(out, job, 0.0, 0.0, Mode::ZeroShot, r, splits.test, train_s + seconds_since(t1));
            return out;
        }

        const auto& p = *job.ex;
        const auto result = train::train(p.train_masked, p.val_masked, stats, cfg);
        const double train_s = seconds_since(t0);
        for (std::size_t k = 0; k < config_.f_te.size(); ++k) {
            const auto& combos = p_combos(job, k);
            for (Mode mode : config_.modes) {
                if (mode == Mode::Scratch && job.variant != train::Variant::Gru) continue;
                const auto t1 = std::chrono::steady_clock::now();
                std::vector<ComboResult> r;
                switch (mode) {
                case Mode::ZeroShot: r = zero_shot_eval(result.checkpoint, splits.test, combos); break;
                case Mode::FineTune:
                    r = fine_tune_eval(result.checkpoint, splits.finetune, splits.test, combos, cfg);
                    break;
                case Mode::Overlap:
                    r = overlap_fine_tune_eval(result.checkpoint, splits.train, p.train_assignment, p.plan,
                                               splits.test, combos, cfg);
                    break;
                case Mode::Scratch: r = scratch_eval(splits.finetune, splits.test, stats, combos, cfg); break;
                }
                emit(out, job, p.f_tr, config_.f_te[k], mode, r, splits.test, train_s + seconds_since(t1));
            }
        }
        return out;
    }

    JobOutput failed(const Job& job, const std::string& message) const {
        JobOutput out;
        out.ok = false;
        auto add = [&](double f_tr, double f_te, Mode mode) {
            CellRecord c = blank(job, f_tr, f_te, mode);
            c.value = std::numeric_limits<double>::quiet_NaN();
            c.failure = message;
            out.cells.push_back(std::move(c));
        };
        if (job.all_sensors) {
            add(0.0, 0.0, Mode::ZeroShot);
            return out;
        }
        for (double f_te : config_.f_te)
            for (Mode mode : config_.modes)
                if (mode != Mode::Scratch || job.variant == train::Variant::Gru) add(job.ex->f_tr, f_te, mode);
        return out;
    }

private:
    CellRecord blank(const Job& job, double f_tr, double f_te, Mode mode) const {
        CellRecord c;
        c.dataset = ds_.name;
        c.variant = mode == Mode::Scratch ? train::Variant::Gru : job.variant;
        c.f_tr = f_tr;
        c.f_te = f_te;
        c.mode = mode;
        c.seed = job.seed;
        c.metric = metric_name(ds_.task.kind);
        return c;
    }

    void emit(JobOutput& out, const Job& job, double f_tr, double f_te, Mode mode,
              const std::vector<ComboResult>& results, const data::Dataset& test, double runtime) const {
        CellRecord c = blank(job, f_tr, f_te, mode);
        double total = 0.0;
        for (const auto& r : results) total += r.value;
        c.value = total / static_cast<double>(results.size());
        c.combinations = results.size();
        c.runtime_s = runtime;
        out.cells.push_back(std::move(c));
        if (!config_.keep_predictions) return;
        const auto truth = targets(test);
        for (const auto& r : results) {
            for (std::size_t i = 0; i < r.predictions.size(); ++i) {
                out.predictions.push_back({job.variant, f_tr, f_te, mode, job.seed, r.combination.to_string(),
                                           test.instances[i].meta.id, r.predictions[i], truth[i]});
            }
        }
    }

    const std::vector<cond::ActiveSet>& p_combos(const Job& job, std::size_t k) const {
        return combos_.at(job.ex)[k];
    }

    const data::Dataset& ds_;
    const BenchConfig& config_;
    const std::map<const Experiment*, std::vector<std::vector<cond::ActiveSet>>>& combos_;
};

bool fully_tagged(const data::Dataset& ds) {
    return ds.size() > 0 && std::all_of(ds.instances.begin(), ds.instances.end(),
                                        [](const auto& x) { return !x.meta.split.empty(); });
}

std::string key_fragment(double f) {
    return std::to_string(static_cast<long long>(std::llround(f * 1000.0)));
}

} // namespace

Experiment prepare_experiment(const data::Dataset& ds, std::uint64_t seed, double f_tr,
                              const std::array<double, 4>& fractions, std::size_t base_combinations,
                              std::size_t total_combinations, std::size_t window_length, std::size_t window_shift) {
    Experiment ex;
    ex.seed = seed;
    ex.f_tr = f_tr;
    const diff::RngStream root(seed);
    ex.splits = fully_tagged(ds) ? data::splits_from_tags(ds) : data::split(ds, fractions, root.split("split"));
    if (ds.task.kind == data::TaskKind::Regression && window_length > 0) {
        for (data::Dataset* part : {&ex.splits.train, &ex.splits.val, &ex.splits.finetune, &ex.splits.test}) {
            *part = data::window_dataset(*part, window_length, window_shift);
        }
        if (ex.splits.train.size() == 0) {
            throw ConfigError("no training series reaches the window length " + std::to_string(window_length));
        }
    }
    ex.stats = data::compute_stats(ex.splits.train);
    const diff::RngStream rng = root.split("plan").split(static_cast<std::uint64_t>(std::llround(f_tr * 1000.0)));
    ex.plan = data::generate_combinations(ds.catalog.size(), f_tr, base_combinations, total_combinations, rng.key());
    ex.train_masked = ex.splits.train;
    ex.val_masked = ex.splits.val;
    ex.train_assignment = data::assign_combinations(ex.train_masked, ex.plan, rng.split("assign-train"));
    data::assign_combinations(ex.val_masked, ex.plan, rng.split("assign-val"));
    return ex;
}

std::vector<cond::ActiveSet> test_combinations(const Experiment& ex, double f_te, std::size_t count) {
    const diff::RngStream rng = diff::RngStream(ex.seed)
                                    .split("plan")
                                    .split(static_cast<std::uint64_t>(std::llround(ex.f_tr * 1000.0)))
                                    .split("test")
                                    .split(static_cast<std::uint64_t>(std::llround(f_te * 1000.0)));
    return data::sample_test_combinations(ex.splits.train.catalog.size(), f_te, ex.plan, count, rng);
}

BenchReport run_benchmark(const data::Dataset& ds, const BenchConfig& config) {
    config.validate();
    ds.validate();

    BenchReport report;
    report.dataset = ds.name;
    report.data_digest = data::hex_digest(ds.digest());
    report.config_echo = config.echo();

    // GRU-A needs an experiment too (for the split), so at least one f_tr is prepared.
    const std::vector<double> f_trs = has_masked_variant(config) ? config.f_tr : std::vector<double>{config.f_tr.empty() ? 0.25 : config.f_tr.front()};
    std::vector<Experiment> experiments;
    experiments.reserve(config.seeds.size() * f_trs.size());
    std::map<const Experiment*, std::vector<std::vector<cond::ActiveSet>>> combos;
    for (auto s : config.seeds) {
        for (double f_tr : f_trs) {
            experiments.push_back(prepare_experiment(ds, s, f_tr, config.fractions, config.base_combinations,
                                                     config.total_combinations, config.window_length,
                                                     config.window_shift));
        }
    }
    if (has_masked_variant(config)) {
        for (const auto& ex : experiments) {
            auto& per_f_te = combos[&ex];
            for (double f_te : config.f_te) {
                auto cs = test_combinations(ex, f_te, config.combinations_per_f_te);
                for (const auto& c : cs) {
                    if (ex.plan.contains(c)) throw CoverageError("test combination " + c.to_string() + " was seen in training");
                    ++report.unseen_checks;
                }
                per_f_te.push_back(std::move(cs));
            }
        }
        spdlog::info("checked {} test combinations against every training mask: all unseen", report.unseen_checks);
    }

    std::vector<Job> jobs;
    for (std::size_t si = 0; si < config.seeds.size(); ++si) {
        const std::uint64_t seed = config.seeds[si];
        const std::string sk = "s" + std::to_string(seed);
        for (auto v : config.variants) {
            if (v == train::Variant::GruA) {
                jobs.push_back({sk + "-all-" + train::to_string(v), v, seed, &experiments[si * f_trs.size()], true});
                continue;
            }
            for (std::size_t i = 0; i < f_trs.size(); ++i) {
                const Experiment* ex = &experiments[si * f_trs.size() + i];
                jobs.push_back({sk + "-ftr" + key_fragment(ex->f_tr) + "-" + train::to_string(v), v, seed, ex, false});
            }
        }
    }

    JobRunner runner(ds, config, combos);
    std::vector<JobOutput> outputs(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            const auto marker = config.work_dir.empty() ? std::filesystem::path{}
                                                        : config.work_dir / "jobs" / (job.key + ".jsonl");
            if (!marker.empty()) {
                if (auto cached = read_marker(marker)) {
                    spdlog::info("job {} already complete, reusing marker", job.key);
                    outputs[i] = std::move(*cached);
                    continue;
                }
            }
            try {
                outputs[i] = runner.run(job);
                if (!marker.empty()) write_marker(marker, outputs[i]);
                spdlog::info("job {} done", job.key);
            } catch (const std::exception& e) {
                spdlog::error("job {} failed: {}", job.key, e.what());
                outputs[i] = runner.failed(job, e.what());
            }
        }
    };
    const std::size_t threads = std::min(config.jobs, jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& o : outputs) {
        for (auto& c : o.cells) report.cells.push_back(std::move(c));
        for (auto& p : o.predictions) report.predictions.push_back(std::move(p));
    }
    auto cell_key = [](const CellRecord& c) {
        return std::tuple(static_cast<int>(c.variant), c.f_tr, c.f_te, static_cast<int>(c.mode), c.seed);
    };
    std::stable_sort(report.cells.begin(), report.cells.end(),
                     [&](const auto& a, const auto& b) { return cell_key(a) < cell_key(b); });
    return report;
}

} // namespace condrnn::bench
