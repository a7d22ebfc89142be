#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "condrnn/bench/report.hpp"
#include "condrnn/data/dataset_io.hpp"
#include "condrnn/data/synth.hpp"
#include "condrnn/error.hpp"
#include "condrnn/train/grad_suite.hpp"

namespace fs = std::filesystem;
using namespace condrnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitUsage = 2;

constexpr const char* kOutEnv = "CONDRNN_OUT";

std::string default_out() {
    const char* env = std::getenv(kOutEnv);
    return env && *env ? env : "runs";
}

// Flat key=value config: every key becomes --key value unless the command
// line already sets it, so flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    std::string path;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            out.push_back(args[i]);
        }
    }
    if (path.empty()) return out;
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file " + path);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string value = trim(line.substr(eq + 1));
        const std::string flag = "--" + key;
        bool given = false;
        for (const auto& a : out) given = given || a == flag || a.rfind(flag + "=", 0) == 0;
        if (!given) {
            out.push_back(flag);
            out.push_back(value);
        }
    }
    return out;
}

struct SynthFlags {
    data::SynthConfig config;
    std::string task = "classification";

    void add(CLI::App* app, const std::string& prefix) {
        app->add_option("--" + prefix + "sensors", config.sensors, "Number of sensors d")->capture_default_str();
        app->add_option("--" + prefix + "classes", config.classes, "Number of classes K")->capture_default_str();
        app->add_option("--" + prefix + "instances", config.instances, "Number of series N")->capture_default_str();
        app->add_option("--" + prefix + "length", config.length, "Series length T")->capture_default_str();
        app->add_option("--" + prefix + "seed", config.seed, "Generator seed")->capture_default_str();
        app->add_option("--" + prefix + "noise", config.noise, "Observation noise")->capture_default_str();
        app->add_option("--" + prefix + "task", task, "classification or regression")->capture_default_str();
    }

    data::Dataset generate() {
        config.task = data::parse_task(task);
        return data::synth_generate(config);
    }
};

struct DataFlags {
    std::string path;
    SynthFlags synth;
    std::size_t window_length = 100;
    std::size_t window_shift = 5;

    void add(CLI::App* app) {
        app->add_option("--data", path, "Dataset directory (manifest.json); synthetic data when omitted");
        synth.add(app, "synth-");
        app->add_option("--window-length", window_length, "Regression window length (0: whole series)")
            ->capture_default_str();
        app->add_option("--window-shift", window_shift, "Regression window shift")->capture_default_str();
    }

    bench::Experiment experiment(const data::Dataset& ds, std::uint64_t seed, double f_tr) const {
        if (window_length > 0 && window_shift == 0) throw ConfigError("window shift must be positive");
        return bench::prepare_experiment(ds, seed, f_tr, data::kDefaultFractions, 16, 64, window_length,
                                         window_shift);
    }

    data::Dataset load() {
        if (!path.empty()) return data::load_dataset(path);
        return synth.generate();
    }
};

struct TrainFlags {
    train::TrainConfig config;
    std::string variant = "gru-cm";

    void add(CLI::App* app) {
        auto& c = config;
        app->add_option("--variant", variant, "gru, gru-se, gru-cm or gru-a")->capture_default_str();
        app->add_option("--hidden", c.model.hidden, "GRU units per layer")->capture_default_str();
        app->add_option("--gru-layers", c.model.gru_layers, "Stacked GRU layers")->capture_default_str();
        app->add_option("--head-layers", c.model.head_layers, "ReLU layers in the output head")->capture_default_str();
        app->add_option("--embedding-width", c.model.embedding_width, "Sensor embedding width (0: d/2)")
            ->capture_default_str();
        app->add_option("--cond-hidden-layers", c.model.cond_hidden_layers, "Hidden layers of the edge/node networks")
            ->capture_default_str();
        app->add_option("--cond-hidden-width", c.model.cond_hidden_width, "Their width (0: embedding width)")
            ->capture_default_str();
        app->add_option("--dropout", c.model.dropout, "Dropout rate")->capture_default_str();
        app->add_option("--leaky-slope", c.model.leaky_slope, "Leaky ReLU slope")->capture_default_str();
        app->add_option("--epochs", c.max_epochs, "Maximum training epochs")->capture_default_str();
        app->add_option("--batch-size", c.batch_size, "Training batch size")->capture_default_str();
        app->add_option("--patience", c.patience, "Early-stopping patience")->capture_default_str();
        app->add_option("--finetune-epochs", c.finetune_epochs, "Maximum fine-tuning epochs")->capture_default_str();
        app->add_option("--finetune-batch-size", c.finetune_batch_size, "Fine-tuning batch size")
            ->capture_default_str();
        app->add_option("--finetune-patience", c.finetune_patience, "Fine-tuning patience")->capture_default_str();
        app->add_option("--lr", c.adam.lr, "Adam learning rate (network)")->capture_default_str();
        app->add_option("--embedding-lr", c.embedding_lr, "SGD learning rate (embeddings)")->capture_default_str();
    }

    train::TrainConfig resolved() {
        config.variant = train::parse_variant(variant);
        return config;
    }
};

std::map<std::string, std::string> parse_echo(const std::string& echo) {
    std::map<std::string, std::string> kv;
    std::istringstream in(echo);
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << text;
}

int cmd_synth(SynthFlags& flags, const std::string& out) {
    const auto ds = flags.generate();
    data::save_dataset(ds, out);
    std::cout << "wrote " << ds.size() << " instances to " << out << "\n"
              << "digest " << data::hex_digest(ds.digest()) << "\n";
    return kExitOk;
}

int cmd_train(DataFlags& data_flags, TrainFlags& flags, double f_tr, bool f_tr_given, std::uint64_t seed,
              const std::string& out) {
    auto cfg = flags.resolved();
    cfg.seed = seed;
    if (cfg.variant == train::Variant::GruA && f_tr_given) {
        spdlog::warn("--variant gru-a trains with every sensor available; ignoring --f-tr");
    }
    const auto ds = data_flags.load();
    const auto ex = data_flags.experiment(ds, seed, f_tr);
    const bool all = cfg.variant == train::Variant::GruA;
    const auto result = train::train(all ? ex.splits.train : ex.train_masked, all ? ex.splits.val : ex.val_masked,
                                      ex.stats, cfg);
    auto ckpt = result.checkpoint;
    std::ostringstream echo;
    echo << cfg.echo() << "f_tr=" << f_tr << "\n"
         << "window_length=" << data_flags.window_length << "\n"
         << "window_shift=" << data_flags.window_shift << "\n"
         << "data_digest=" << data::hex_digest(ds.digest()) << "\n";
    ckpt.config_echo = echo.str();

    const fs::path dir(out);
    train::save_checkpoint(ckpt, dir / "checkpoint.bin");
    std::ostringstream hist;
    hist.precision(17);
    hist << "epoch,train_loss,val_loss\n";
    for (const auto& h : result.history) hist << h.epoch << ',' << h.train_loss << ',' << h.val_loss << '\n';
    write_text(dir / "history.csv", hist.str());
    write_text(dir / "config.txt", ckpt.config_echo);
    std::cout << "variant " << train::to_string(cfg.variant) << ": " << result.history.size() << " epochs, best val loss "
              << ckpt.best_val_loss << " at epoch " << ckpt.epoch << "\n"
              << "checkpoint " << (dir / "checkpoint.bin").string() << " digest "
              << data::hex_digest(train::checkpoint_digest(ckpt)) << "\n";
    return result.diverged ? kExitVerify : kExitOk;
}

struct EvalFlags {
    std::string checkpoint;
    std::string mode = "zero-shot";
    std::vector<double> f_te{0.1, 0.25, 0.4, 0.5};
    std::size_t combinations = 5;
};

int cmd_eval(DataFlags& data_flags, TrainFlags& train_flags, const EvalFlags& flags, const std::string& out) {
    if (!fs::exists(flags.checkpoint)) throw Error("checkpoint not found: " + flags.checkpoint);
    const auto ckpt = train::load_checkpoint(flags.checkpoint);
    const auto echo = parse_echo(ckpt.config_echo);
    const std::uint64_t seed = echo.count("seed") ? std::stoull(echo.at("seed")) : 1;
    const double f_tr = echo.count("f_tr") ? std::stod(echo.at("f_tr")) : 0.25;
    if (echo.count("window_length")) data_flags.window_length = std::stoull(echo.at("window_length"));
    if (echo.count("window_shift")) data_flags.window_shift = std::stoull(echo.at("window_shift"));
    const auto ds = data_flags.load();
    if (echo.count("data_digest") && echo.at("data_digest") != data::hex_digest(ds.digest())) {
        spdlog::warn("dataset digest differs from the one the checkpoint was trained on");
    }
    auto cfg = train_flags.config;
    cfg.variant = ckpt.variant;
    cfg.seed = seed;
    const auto mode = bench::parse_mode(flags.mode);
    const auto ex = data_flags.experiment(ds, seed, f_tr);
    const std::string metric = bench::metric_name(ds.task.kind);

    const fs::path dir(out);
    fs::create_directories(dir);
    std::ofstream records(dir / "eval.jsonl");
    std::ofstream selection;
    if (mode == bench::Mode::Overlap) selection.open(dir / "overlap_selection.jsonl");
    const auto plan_sets = ex.plan.all();

    const bool all_sensors = ckpt.variant == train::Variant::GruA;
    const std::vector<double> f_tes = all_sensors ? std::vector<double>{0.0} : flags.f_te;
    for (double f_te : f_tes) {
        const auto combos = all_sensors ? std::vector<cond::ActiveSet>{cond::ActiveSet::all(ds.catalog.size())}
                                        : bench::test_combinations(ex, f_te, flags.combinations);
        std::vector<bench::ComboResult> results;
        switch (mode) {
        case bench::Mode::ZeroShot: results = bench::zero_shot_eval(ckpt, ex.splits.test, combos); break;
        case bench::Mode::FineTune:
            results = bench::fine_tune_eval(ckpt, ex.splits.finetune, ex.splits.test, combos, cfg);
            break;
        case bench::Mode::Overlap:
            results = bench::overlap_fine_tune_eval(ckpt, ex.splits.train, ex.train_assignment, ex.plan,
                                                    ex.splits.test, combos, cfg);
            break;
        case bench::Mode::Scratch:
            results = bench::scratch_eval(ex.splits.finetune, ex.splits.test, ex.stats, combos, cfg);
            break;
        }
        for (const auto& r : results) {
            nlohmann::json j = {{"dataset", ds.name},       {"variant", train::to_string(ckpt.variant)},
                                {"f_tr", f_tr},             {"f_te", f_te},
                                {"mode", bench::to_string(mode)}, {"seed", seed},
                                {"combination", r.combination.to_string()}, {"metric", metric},
                                {"value", r.value}};
            records << j.dump() << '\n';
            std::cout << bench::to_string(mode) << " f_te=" << f_te << " " << r.combination.to_string() << " "
                      << metric << "=" << r.value << "\n";
            if (r.selected) {
                const auto& chosen = plan_sets[*r.selected];
                selection << nlohmann::json{{"test", r.combination.to_string()},
                                            {"selected_index", *r.selected},
                                            {"selected", chosen.to_string()},
                                            {"overlap", chosen.overlap(r.combination)},
                                            {"union", chosen.union_size(r.combination)}}
                                 .dump()
                          << '\n';
            }
        }
    }
    if (!records) throw Error("failed writing " + (dir / "eval.jsonl").string());
    return kExitOk;
}

struct BenchFlags {
    std::vector<std::string> variants{"gru", "gru-se", "gru-cm", "gru-a"};
    std::vector<double> f_tr{0.25, 0.4};
    std::vector<double> f_te{0.1, 0.25, 0.4, 0.5};
    std::vector<std::string> modes{"zero-shot", "fine-tune"};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::size_t combinations = 5;
    std::size_t jobs = 1;
    bool csv = false;
    bool no_predictions = false;
    bool fresh = false;
};

int cmd_bench(DataFlags& data_flags, TrainFlags& train_flags, const BenchFlags& flags, const std::string& out) {
    bench::BenchConfig bc;
    bc.variants.clear();
    for (const auto& v : flags.variants) bc.variants.push_back(train::parse_variant(v));
    bc.modes.clear();
    for (const auto& m : flags.modes) bc.modes.push_back(bench::parse_mode(m));
    bc.f_tr = flags.f_tr;
    bc.f_te = flags.f_te;
    bc.seeds = flags.seeds;
    bc.combinations_per_f_te = flags.combinations;
    bc.jobs = flags.jobs;
    bc.train = train_flags.resolved();
    bc.keep_predictions = !flags.no_predictions;
    bc.window_length = data_flags.window_length;
    bc.window_shift = data_flags.window_shift;
    const fs::path dir(out);
    bc.work_dir = dir / "work";
    if (flags.fresh) fs::remove_all(bc.work_dir);

    const auto ds = data_flags.load();
    const auto report = bench::run_benchmark(ds, bc);
    const auto expected = bench::expected_cells(bc);
    if (report.cells.size() != expected) {
        throw Error("grid produced " + std::to_string(report.cells.size()) + " cells, expected " +
                    std::to_string(expected));
    }
    bench::save_report(report, dir, flags.csv);
    bench::write_table(std::cout, report);
    std::cout << "report digest " << data::hex_digest(bench::report_digest(report)) << "\n";
    std::size_t failed = 0;
    for (const auto& c : report.cells) failed += !c.failure.empty();
    if (failed) {
        spdlog::error("{} of {} cells failed", failed, report.cells.size());
        return kExitVerify;
    }
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
    bool ok = true;
    for (const auto& e : train::run_grad_suite(seed)) {
        std::cout << (e.passed() ? "PASS " : "FAIL ") << e.name << "  max_rel_error=" << e.error
                  << "  tolerance=" << e.tolerance << "  coordinates=" << e.coordinates << "\n";
        ok = ok && e.passed();
    }
    return ok ? kExitOk : kExitVerify;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensor-combination conditioned recurrent models: data, training and benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Show help for every command");
    std::string out = default_out();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset directory");
    SynthFlags synth_flags;
    synth_flags.add(synth, "");
    synth->add_option("--out", out, "Output directory (default from " + std::string(kOutEnv) + ")")
        ->capture_default_str();

    DataFlags data_flags;
    TrainFlags train_flags;
    double f_tr = 0.25;
    std::uint64_t seed = 1;

    auto* train_cmd = app.add_subcommand("train", "Train one model variant");
    data_flags.add(train_cmd);
    train_flags.add(train_cmd);
    auto* f_tr_opt = train_cmd->add_option("--f-tr", f_tr, "Fraction of sensors masked in training")
                         ->capture_default_str();
    train_cmd->add_option("--seed", seed, "Run seed (split, plan, initialization)")->capture_default_str();
    train_cmd->add_option("--out", out, "Output directory")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint under unseen sensor combinations");
    EvalFlags eval_flags;
    DataFlags eval_data;
    TrainFlags eval_train;
    eval_data.add(eval_cmd);
    eval_train.add(eval_cmd);
    eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--mode", eval_flags.mode, "zero-shot, fine-tune, overlap or scratch")->capture_default_str();
    eval_cmd->add_option("--f-te", eval_flags.f_te, "Test mask fractions")->delimiter(',')->capture_default_str();
    eval_cmd->add_option("--combinations", eval_flags.combinations, "Combinations per f_te")->capture_default_str();
    eval_cmd->add_option("--out", out, "Output directory")->capture_default_str();

    auto* bench_cmd = app.add_subcommand("bench", "Run the variant x f_tr x f_te x mode grid");
    BenchFlags bench_flags;
    DataFlags bench_data;
    TrainFlags bench_train;
    bench_data.add(bench_cmd);
    bench_train.add(bench_cmd);
    bench_cmd->add_option("--variants", bench_flags.variants, "Variants")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--f-tr", bench_flags.f_tr, "Training mask fractions")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--f-te", bench_flags.f_te, "Test mask fractions")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--modes", bench_flags.modes, "zero-shot, fine-tune, overlap, scratch")
        ->delimiter(',')
        ->capture_default_str();
    bench_cmd->add_option("--seeds", bench_flags.seeds, "Run seeds")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--combinations", bench_flags.combinations, "Combinations per f_te")->capture_default_str();
    bench_cmd->add_option("--jobs", bench_flags.jobs, "Parallel jobs")->capture_default_str();
    bench_cmd->add_flag("--csv", bench_flags.csv, "Also write report.csv");
    bench_cmd->add_flag("--no-predictions", bench_flags.no_predictions, "Skip the per-instance predictions file");
    bench_cmd->add_flag("--fresh", bench_flags.fresh, "Ignore completion markers from earlier runs");
    bench_cmd->add_option("--out", out, "Output directory")->capture_default_str();

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every primitive and model");
    std::uint64_t grad_seed = 1;
    grad_cmd->add_option("--seed", grad_seed, "Seed for the random inputs")->capture_default_str();

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
        std::reverse(args.begin(), args.end());
        args = merge_config(args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    try {
        if (*synth) return cmd_synth(synth_flags, out);
        if (*train_cmd) return cmd_train(data_flags, train_flags, f_tr, f_tr_opt->count() > 0, seed, out);
        if (*eval_cmd) return cmd_eval(eval_data, eval_train, eval_flags, out);
        if (*bench_cmd) return cmd_bench(bench_data, bench_train, bench_flags, out);
        if (*grad_cmd) return cmd_gradcheck(grad_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
