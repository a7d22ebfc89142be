#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "condrnn/bench/metrics.hpp"
#include "condrnn/bench/report.hpp"
#include "condrnn/data/synth.hpp"
#include "condrnn/error.hpp"

using namespace condrnn;
using namespace condrnn::bench;
using cond::ActiveSet;
using train::Variant;

namespace {

namespace fs = std::filesystem;

data::Dataset synthetic(std::size_t d, std::size_t n, std::uint64_t seed) {
    data::SynthConfig c;
    c.sensors = d;
    c.classes = 3;
    c.instances = n;
    c.length = 12;
    c.seed = seed;
    return data::synth_generate(c);
}

train::TrainConfig quick_train(std::size_t epochs) {
    train::TrainConfig c;
    c.model.hidden = 8;
    c.model.gru_layers = 1;
    c.model.dropout = 0.0;
    c.max_epochs = epochs;
    c.patience = epochs;
    c.finetune_epochs = 2;
    c.finetune_patience = 2;
    c.batch_size = 16;
    c.adam.lr = 1e-2;
    c.embedding_lr = 1e-2;
    return c;
}

BenchConfig tiny_grid(const fs::path& work) {
    BenchConfig c;
    c.variants = {Variant::Gru, Variant::GruCm, Variant::GruA};
    c.f_tr = {0.25};
    c.f_te = {0.25, 0.5};
    c.modes = {Mode::ZeroShot, Mode::FineTune, Mode::Scratch};
    c.seeds = {1, 2};
    c.combinations_per_f_te = 2;
    c.base_combinations = 4;
    c.total_combinations = 8;
    c.train = quick_train(2);
    c.work_dir = work;
    return c;
}

// Two-sided Student t tail via the regularized incomplete beta function,
// integrated numerically.
double t_two_sided(double t, double df) {
    const double x = df / (df + t * t), a = df / 2.0, b = 0.5;
    const int n = 200000;
    // Substitute x = 1 - (1 - x0) ... integrate the density on [0, x] with Simpson.
    auto f = [&](double u) { return u <= 0.0 ? 0.0 : std::pow(u, a - 1.0) * std::pow(1.0 - u, b - 1.0); };
    const double h = x / n;
    double s = f(0.0) + f(x);
    for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0 / std::beta(a, b);
}

} // namespace

TEST(Metrics, ErrorRateArithmetic) {
    const std::size_t labels[] = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    std::vector<std::size_t> preds(std::begin(labels), std::end(labels));
    EXPECT_DOUBLE_EQ(error_rate(preds, labels), 0.0);
    preds[3] = 2;
    preds[7] = 0;
    EXPECT_DOUBLE_EQ(error_rate(preds, labels), 20.0);
}

TEST(Metrics, ErrorRateMatchesConfusionTrace) {
    diff::RngStream rng(1);
    std::vector<std::size_t> p, y;
    for (int i = 0; i < 523; ++i) {
        y.push_back(rng.below(6));
        p.push_back(rng.bernoulli(0.7) ? y.back() : rng.below(6));
    }
    std::vector<std::vector<int>> confusion(6, std::vector<int>(6, 0));
    for (std::size_t i = 0; i < p.size(); ++i) ++confusion[y[i]][p[i]];
    int trace = 0;
    for (int k = 0; k < 6; ++k) trace += confusion[k][k];
    EXPECT_NEAR(error_rate(p, y), 100.0 * (1.0 - trace / 523.0), 1e-12);
}

TEST(Metrics, ErrorRateRejectsBadInput) {
    std::vector<std::size_t> empty, one{1}, two{1, 2};
    EXPECT_THROW(error_rate(empty, empty), ContractError);
    EXPECT_THROW(error_rate(one, two), ContractError);
}

TEST(Metrics, Rmse) {
    const double t[] = {10.0, 20.0};
    const double same[] = {10.0, 20.0};
    const double off[] = {13.0, 24.0};
    EXPECT_DOUBLE_EQ(rmse(same, t), 0.0);
    EXPECT_NEAR(rmse(off, t), 3.5355339059327378, 1e-15);
    std::vector<double> empty;
    EXPECT_THROW(rmse(empty, empty), ContractError);
}

TEST(Metrics, RmseMatchesLoop) {
    diff::RngStream rng(2);
    std::vector<double> p, y;
    for (int i = 0; i < 400; ++i) {
        p.push_back(rng.uniform(0, 150));
        y.push_back(rng.uniform(0, 150));
    }
    double s = 0.0;
    for (int i = 0; i < 400; ++i) s += (p[i] - y[i]) * (p[i] - y[i]);
    EXPECT_NEAR(rmse(p, y), std::sqrt(s / 400.0), 1e-12);
}

TEST(Metrics, MeanAndSampleStd) {
    const double xs[] = {2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(mean(xs), 5.0);
    EXPECT_NEAR(sample_std(xs), std::sqrt(32.0 / 7.0), 1e-15);
    const double one[] = {3.0};
    EXPECT_EQ(sample_std(one), 0.0);
}

TEST(Metrics, WelchMatchesIntegratedTail) {
    const double a[] = {1.1, 2.3, 2.9, 4.2, 5.0};
    const double b[] = {2.5, 4.1, 6.3, 7.7, 9.9, 8.8};
    const double ma = mean(a), mb = mean(b), va = std::pow(sample_std(a), 2), vb = std::pow(sample_std(b), 2);
    const double sa = va / 5, sb = vb / 6;
    const double t = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) / (sa * sa / 4 + sb * sb / 5);
    EXPECT_NEAR(welch_p_value(a, b), t_two_sided(t, df), 1e-6);
    EXPECT_NEAR(welch_p_value(a, a), 1.0, 1e-12);
    const double c[] = {1.0, 1.0};
    EXPECT_TRUE(std::isnan(welch_p_value(c, c)));
    EXPECT_TRUE(std::isnan(welch_p_value(std::span<const double>(a, 1), b)));
}

TEST(Modes, RoundTripNames) {
    for (Mode m : {Mode::ZeroShot, Mode::FineTune, Mode::Overlap, Mode::Scratch}) EXPECT_EQ(parse_mode(to_string(m)), m);
    EXPECT_THROW(parse_mode("few-shot"), ConfigError);
    EXPECT_EQ(metric_name(dyn::TaskKind::Classification), "error_rate");
    EXPECT_EQ(metric_name(dyn::TaskKind::Regression), "rmse");
}

TEST(Experiment, RegressionWindowsFollowTheirEngineSplit) {
    data::SynthConfig sc;
    sc.task = data::TaskKind::Regression;
    sc.sensors = 12;
    sc.instances = 60;
    sc.length = 40;
    const auto ds = data::synth_generate(sc);
    const auto ex = prepare_experiment(ds, 3, 0.25, data::kDefaultFractions, 16, 64, 30, 5);
    const std::array<std::pair<const char*, const data::Dataset*>, 4> parts{
        {{"train", &ex.splits.train}, {"val", &ex.splits.val}, {"finetune", &ex.splits.finetune}, {"test", &ex.splits.test}}};
    std::map<std::string, std::string> split_of;
    std::size_t windows = 0;
    for (const auto& [name, part] : parts) {
        for (const auto& w : part->instances) {
            ++windows;
            EXPECT_EQ(w.length(), 30u);
            const auto [it, fresh] = split_of.emplace(w.meta.source, name);
            if (!fresh) EXPECT_EQ(it->second, name) << w.meta.id;
        }
    }
    std::size_t expected = 0;
    for (const auto& e : ds.instances) expected += (e.length() - 30) / 5 + 1;
    EXPECT_EQ(windows, expected);
    EXPECT_EQ(split_of.size(), ds.size());
}

TEST(Experiment, ZeroWindowLengthKeepsWholeSeries) {
    data::SynthConfig sc;
    sc.task = data::TaskKind::Regression;
    sc.instances = 40;
    const auto ds = data::synth_generate(sc);
    const auto ex = prepare_experiment(ds, 3, 0.25, data::kDefaultFractions, 16, 64, 0, 5);
    EXPECT_EQ(ex.splits.train.size() + ex.splits.val.size() + ex.splits.finetune.size() + ex.splits.test.size(), 40u);
}

TEST(Evaluation, ZeroShotDoesNotMutateCheckpoint) {
    const auto ex = prepare_experiment(synthetic(6, 120, 1), 1, 0.25, data::kDefaultFractions, 4, 8);
    auto cfg = quick_train(2);
    const auto r = train::train(ex.train_masked, ex.val_masked, ex.stats, cfg);
    const auto before = train::checkpoint_digest(r.checkpoint);
    const auto combos = test_combinations(ex, 0.25, 3);
    const auto results = zero_shot_eval(r.checkpoint, ex.splits.test, combos);
    fine_tune_eval(r.checkpoint, ex.splits.finetune, ex.splits.test, combos, cfg);
    EXPECT_EQ(train::checkpoint_digest(r.checkpoint), before);
    ASSERT_EQ(results.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(results[i].combination, combos[i]);
        EXPECT_EQ(results[i].predictions.size(), ex.splits.test.size());
        EXPECT_GE(results[i].value, 0.0);
        EXPECT_LE(results[i].value, 100.0);
    }
}

TEST(Evaluation, TestCombinationsAreUnseenAndDeterministic) {
    const auto ds = synthetic(8, 80, 2);
    const auto ex = prepare_experiment(ds, 3, 0.25);
    const auto again = prepare_experiment(ds, 3, 0.25);
    for (double f_te : {0.1, 0.25, 0.4, 0.5}) {
        const auto combos = test_combinations(ex, f_te, 5);
        EXPECT_EQ(combos, test_combinations(again, f_te, 5));
        for (const auto& c : combos)
            for (const auto& seen : ex.plan.all()) EXPECT_NE(c, seen);
    }
}

TEST(Evaluation, FineTuneCombinationsAreIsolated) {
    const auto ex = prepare_experiment(synthetic(6, 160, 4), 2, 0.25, data::kDefaultFractions, 4, 8);
    auto cfg = quick_train(2);
    const auto r = train::train(ex.train_masked, ex.val_masked, ex.stats, cfg);
    auto combos = test_combinations(ex, 0.25, 3);
    const auto forward = fine_tune_eval(r.checkpoint, ex.splits.finetune, ex.splits.test, combos, cfg);
    std::reverse(combos.begin(), combos.end());
    const auto backward = fine_tune_eval(r.checkpoint, ex.splits.finetune, ex.splits.test, combos, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(forward[i].combination, backward[2 - i].combination);
        EXPECT_EQ(forward[i].value, backward[2 - i].value);
        EXPECT_EQ(forward[i].predictions, backward[2 - i].predictions);
    }
}

TEST(Evaluation, EmptyFineTuneSplitFallsBackToZeroShot) {
    const auto ex = prepare_experiment(synthetic(6, 120, 5), 1, 0.25, data::kDefaultFractions, 4, 8);
    auto cfg = quick_train(1);
    const auto r = train::train(ex.train_masked, ex.val_masked, ex.stats, cfg);
    const auto combos = test_combinations(ex, 0.5, 2);
    const auto ft = fine_tune_eval(r.checkpoint, ex.splits.finetune.empty_like(), ex.splits.test, combos, cfg);
    const auto zs = zero_shot_eval(r.checkpoint, ex.splits.test, combos);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(ft[i].value, zs[i].value);
}

TEST(Overlap, TrainingCombinationSelectsItself) {
    const auto plan = data::generate_combinations(10, 0.4, 16, 64, 7);
    const auto all = plan.all();
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(select_overlap_combination(plan, all[i]), i);
}

TEST(Overlap, MatchesExhaustiveScoring) {
    const auto plan = data::generate_combinations(12, 0.25, 16, 64, 8);
    const auto all = plan.all();
    diff::RngStream rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> bits(12);
        for (auto& b : bits) b = rng.bernoulli(0.5);
        bits[rng.below(12)] = 1;
        const ActiveSet test(bits);
        std::size_t best = 0;
        for (std::size_t i = 1; i < all.size(); ++i) {
            const auto ov = all[i].overlap(test), bov = all[best].overlap(test);
            const double j = double(ov) / double(all[i].union_size(test));
            const double bj = double(bov) / double(all[best].union_size(test));
            if (ov > bov || (ov == bov && j > bj)) best = i;
        }
        EXPECT_EQ(select_overlap_combination(plan, test), best);
    }
}

TEST(Overlap, FineTunesOnSelectedTrainingInstances) {
    const auto ex = prepare_experiment(synthetic(6, 160, 6), 1, 0.25, data::kDefaultFractions, 4, 8);
    auto cfg = quick_train(2);
    const auto r = train::train(ex.train_masked, ex.val_masked, ex.stats, cfg);
    const auto combos = test_combinations(ex, 0.25, 2);
    const auto res = overlap_fine_tune_eval(r.checkpoint, ex.train_masked, ex.train_assignment, ex.plan,
                                            ex.splits.test, combos, cfg);
    ASSERT_EQ(res.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        ASSERT_TRUE(res[i].selected);
        EXPECT_EQ(*res[i].selected, select_overlap_combination(ex.plan, combos[i]));
    }
}

TEST(Grid, ExpectedCellCount) {
    BenchConfig c;
    // 3 masked variants x 2 modes x 2 f_tr x 4 f_te x 5 seeds, plus one GRU-A cell per seed.
    EXPECT_EQ(expected_cells(c), 3u * 2 * 2 * 4 * 5 + 5);
    c.modes.push_back(Mode::Scratch);
    EXPECT_EQ(expected_cells(c), 3u * 2 * 2 * 4 * 5 + 2 * 4 * 5 + 5);
    c.variants = {Variant::GruCm};
    EXPECT_EQ(expected_cells(c), 2u * 2 * 4 * 5);
}

TEST(Grid, TinyRunIsCompleteDeterministicAndResumable) {
    const auto ds = synthetic(6, 100, 7);
    const auto work = fs::temp_directory_path() / "condrnn_test_grid";
    fs::remove_all(work);
    auto cfg = tiny_grid(work);
    const auto first = run_benchmark(ds, cfg);
    EXPECT_EQ(first.cells.size(), expected_cells(cfg));
    for (const auto& c : first.cells) EXPECT_TRUE(c.failure.empty()) << c.failure;
    EXPECT_GT(first.unseen_checks, 0u);

    // Resume from completion markers.
    const auto resumed = run_benchmark(ds, cfg);
    EXPECT_EQ(report_digest(resumed), report_digest(first));

    // Fresh run without markers.
    auto fresh_cfg = cfg;
    fresh_cfg.work_dir.clear();
    const auto fresh = run_benchmark(ds, fresh_cfg);
    EXPECT_EQ(report_digest(fresh), report_digest(first));

    std::size_t gru_a = 0;
    for (const auto& c : first.cells) {
        if (c.variant != Variant::GruA) continue;
        ++gru_a;
        EXPECT_EQ(c.f_te, 0.0);
        EXPECT_EQ(c.combinations, 1u);
    }
    EXPECT_EQ(gru_a, cfg.seeds.size());

    std::ostringstream table, jsonl;
    write_table(table, first);
    write_jsonl(jsonl, first);
    EXPECT_NE(table.str().find("zero-shot f_tr=25 f_te=25"), std::string::npos) << table.str();
    EXPECT_NE(table.str().find("fine-tune f_tr=25 f_te=50"), std::string::npos);
    EXPECT_NE(table.str().find("all sensors"), std::string::npos);
    std::size_t lines = 0;
    std::string line;
    std::istringstream in(jsonl.str());
    while (std::getline(in, line)) {
        ++lines;
        for (const char* key : {"\"dataset\"", "\"variant\"", "\"f_tr\"", "\"f_te\"", "\"mode\"", "\"seed\"",
                                "\"metric\"", "\"value\"", "\"runtime_s\""})
            EXPECT_NE(line.find(key), std::string::npos) << key;
    }
    EXPECT_EQ(lines, first.cells.size());
}

TEST(Grid, DivergedTrainingKeepsStartingCheckpoint) {
    auto ds = synthetic(6, 100, 8);
    auto cfg = tiny_grid({});
    cfg.variants = {Variant::GruCm};
    cfg.modes = {Mode::ZeroShot};
    cfg.seeds = {1};
    cfg.f_te = {0.25};
    cfg.train.max_epochs = 1;
    cfg.train.adam.lr = 1e300;  // overflows on the first step
    const auto report = run_benchmark(ds, cfg);
    ASSERT_EQ(report.cells.size(), 1u);
    const auto& c = report.cells.front();
    EXPECT_TRUE(c.failure.empty()) << c.failure;
    EXPECT_TRUE(std::isfinite(c.value));
}

TEST(Evaluation, MaskingPureNoiseSensorBarelyMatters) {
    // The generator's last sensor carries no class signal.
    data::SynthConfig sc;
    sc.instances = 400;
    const auto ds = data::synth_generate(sc);
    const std::size_t d = sc.sensors;
    auto cfg = quick_train(15);
    cfg.model.hidden = 16;
    cfg.adam.lr = 3e-3;
    cfg.embedding_lr = 5e-3;
    const auto without_noise = ActiveSet::parse(std::string(d - 1, '1') + "0");
    double diff_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ex = prepare_experiment(ds, seed, 0.25);
        cfg.seed = seed;
        const auto r = train::train(ex.train_masked, ex.val_masked, ex.stats, cfg);
        const auto res = zero_shot_eval(r.checkpoint, ex.splits.test, {ActiveSet::all(d), without_noise});
        diff_sum += res[1].value - res[0].value;
    }
    EXPECT_LE(std::fabs(diff_sum / 5.0), 1.0);
}
