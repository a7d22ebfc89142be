#include "condrnn/bench/evaluation.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "condrnn/bench/metrics.hpp"
#include "condrnn/error.hpp"

namespace condrnn::bench {

std::string to_string(Mode m) {
    switch (m) {
    case Mode::ZeroShot: return "zero-shot";
    case Mode::FineTune: return "fine-tune";
    case Mode::Overlap: return "overlap";
    case Mode::Scratch: return "scratch";
    }
    return "?";
}

Mode parse_mode(const std::string& s) {
    std::string k = s;
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
    if (k == "zero-shot" || k == "zeroshot") return Mode::ZeroShot;
    if (k == "fine-tune" || k == "finetune") return Mode::FineTune;
    if (k == "overlap" || k == "overlap-fine-tune") return Mode::Overlap;
    if (k == "scratch") return Mode::Scratch;
    throw ConfigError("unknown evaluation mode '" + s + "'");
}

std::string metric_name(dyn::TaskKind kind) {
    return kind == dyn::TaskKind::Classification ? "error_rate" : "rmse";
}

std::vector<double> targets(const data::Dataset& test) {
    std::vector<double> t;
    t.reserve(test.size());
    for (const auto& x : test.instances) {
        t.push_back(test.task.kind == dyn::TaskKind::Classification ? static_cast<double>(x.label) : x.rul);
    }
    return t;
}

ComboResult score(train::Model& model, const data::Dataset& test, const data::NormStats& stats) {
    ComboResult r;
    const auto outputs = train::predict(model, test, stats);
    r.predictions.reserve(outputs.size());
    if (test.task.kind == dyn::TaskKind::Classification) {
        std::vector<std::size_t> pred;
        std::vector<std::size_t> labels;
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            pred.push_back(dyn::predict_label(outputs[i]));
            labels.push_back(test.instances[i].label);
            r.predictions.push_back(static_cast<double>(pred.back()));
        }
        r.value = error_rate(pred, labels);
    } else {
        for (const auto& o : outputs) {
            r.predictions.push_back(dyn::denormalize_rul(o.at(0), stats.target_min, stats.target_max));
        }
        r.value = rmse(r.predictions, targets(test));
    }
    return r;
}

std::vector<ComboResult> zero_shot_eval(const train::Checkpoint& ckpt, const data::Dataset& test,
                                        const std::vector<cond::ActiveSet>& combinations) {
    train::Model model = train::instantiate(ckpt);
    std::vector<ComboResult> out;
    for (const auto& combo : combinations) {
        ComboResult r = score(model, data::remask(test, combo), ckpt.stats);
        r.combination = combo;
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

ComboResult tune_and_score(const train::Checkpoint& ckpt, const data::Dataset& tuning, const data::Dataset& test,
                           const cond::ActiveSet& combo, const train::TrainConfig& config) {
    const auto tuned = train::fine_tune(ckpt, data::remask(tuning, combo), config);
    train::Model model = train::instantiate(tuned.checkpoint);
    ComboResult r = score(model, data::remask(test, combo), ckpt.stats);
    r.combination = combo;
    return r;
}

} // namespace

std::vector<ComboResult> fine_tune_eval(const train::Checkpoint& ckpt, const data::Dataset& finetune,
                                        const data::Dataset& test,
                                        const std::vector<cond::ActiveSet>& combinations,
                                        const train::TrainConfig& config) {
    if (finetune.size() == 0) {
        spdlog::warn("fine-tune split is empty; reporting zero-shot results");
        return zero_shot_eval(ckpt, test, combinations);
    }
    std::vector<ComboResult> out;
    for (const auto& combo : combinations) out.push_back(tune_and_score(ckpt, finetune, test, combo, config));
    return out;
}

std::size_t select_overlap_combination(const data::CombinationPlan& plan, const cond::ActiveSet& test) {
    const auto all = plan.all();
    if (all.empty()) throw ContractError("overlap selection over an empty plan");
    std::size_t best = 0;
    std::size_t best_overlap = 0;
    double best_jaccard = -1.0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const std::size_t ov = all[i].overlap(test);
        const double jac = static_cast<double>(ov) / static_cast<double>(all[i].union_size(test));
        if (ov > best_overlap || (ov == best_overlap && jac > best_jaccard)) {
            best = i;
            best_overlap = ov;
            best_jaccard = jac;
        }
    }
    return best;
}

std::vector<ComboResult> overlap_fine_tune_eval(const train::Checkpoint& ckpt, const data::Dataset& train_split,
                                                const std::vector<std::size_t>& assignment,
                                                const data::CombinationPlan& plan, const data::Dataset& test,
                                                const std::vector<cond::ActiveSet>& combinations,
                                                const train::TrainConfig& config) {
    if (assignment.size() != train_split.size()) {
        throw ContractError("overlap evaluation needs one combination index per training instance");
    }
    std::vector<ComboResult> out;
    for (const auto& combo : combinations) {
        const std::size_t chosen = select_overlap_combination(plan, combo);
        data::Dataset pool = train_split.empty_like();
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            if (assignment[i] == chosen) pool.instances.push_back(train_split.instances[i]);
        }
        ComboResult r;
        if (pool.size() == 0) {
            spdlog::warn("no training instances carry combination {}; reporting zero-shot", chosen);
            r = zero_shot_eval(ckpt, test, {combo}).front();
        } else {
            r = tune_and_score(ckpt, pool, test, combo, config);
        }
        r.selected = chosen;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ComboResult> scratch_eval(const data::Dataset& finetune, const data::Dataset& test,
                                      const data::NormStats& stats,
                                      const std::vector<cond::ActiveSet>& combinations,
                                      const train::TrainConfig& config) {
    if (finetune.size() == 0) throw ContractError("scratch training needs a non-empty fine-tune split");
    std::vector<ComboResult> out;
    train::TrainConfig cfg = config;
    cfg.variant = train::Variant::Gru;
    for (const auto& combo : combinations) {
        const data::Dataset masked = data::remask(finetune, combo);
        std::vector<std::size_t> order(masked.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        diff::RngStream(config.seed).split("scratch").shuffle(std::span<std::size_t>(order));
        const std::size_t held = masked.size() >= 10 ? masked.size() / 10 : 0;
        data::Dataset fit = masked.empty_like();
        data::Dataset val = masked.empty_like();
        for (std::size_t i = 0; i < order.size(); ++i) {
            (i < held ? val : fit).instances.push_back(masked.instances[order[i]]);
        }
        const auto trained = train::train(fit, val, stats, cfg);
        train::Model model = train::instantiate(trained.checkpoint);
        ComboResult r = score(model, data::remask(test, combo), stats);
        r.combination = combo;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace condrnn::bench
