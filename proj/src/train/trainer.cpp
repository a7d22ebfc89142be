#include "condrnn/train/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "condrnn/error.hpp"
#include "condrnn/train/losses.hpp"

namespace condrnn::train {

std::string TrainConfig::echo() const {
    std::ostringstream os;
    os.precision(17);
    os << "variant=" << to_string(variant) << '\n'
       << "embedding_width=" << model.embedding_width << '\n'
       << "gru_layers=" << model.gru_layers << '\n'
       << "hidden=" << model.hidden << '\n'
       << "head_layers=" << model.head_layers << '\n'
       << "cond_hidden_layers=" << model.cond_hidden_layers << '\n'
       << "cond_hidden_width=" << model.cond_hidden_width << '\n'
       << "dropout=" << model.dropout << '\n'
       << "leaky_slope=" << model.leaky_slope << '\n'
       << "max_epochs=" << max_epochs << '\n'
       << "batch_size=" << batch_size << '\n'
       << "patience=" << patience << '\n'
       << "finetune_epochs=" << finetune_epochs << '\n'
       << "finetune_batch_size=" << finetune_batch_size << '\n'
       << "finetune_patience=" << finetune_patience << '\n'
       << "finetune_holdout=" << finetune_holdout << '\n'
       << "embedding_lr=" << embedding_lr << '\n'
       << "adam_lr=" << adam.lr << '\n'
       << "adam_beta1=" << adam.beta1 << '\n'
       << "adam_beta2=" << adam.beta2 << '\n'
       << "adam_eps=" << adam.eps << '\n'
       << "seed=" << seed << '\n';
    return os.str();
}

void TrainConfig::validate() const {
    if (batch_size == 0 || finetune_batch_size == 0) throw ConfigError("batch sizes must be positive");
    if (patience == 0 || finetune_patience == 0) throw ConfigError("patience must be positive");
    if (model.gru_layers == 0 || model.hidden == 0) throw ConfigError("GRU needs at least one layer and unit");
    if (!(embedding_lr >= 0.0) || !(adam.lr >= 0.0)) throw ConfigError("learning rates must be non-negative");
    if (!(finetune_holdout >= 0.0 && finetune_holdout < 1.0)) throw ConfigError("finetune_holdout must lie in [0,1)");
}

diff::Var batch_loss(diff::Tape& tape, Model& model, const data::MiniBatch& batch, bool training,
                     diff::RngStream& rng) {
    diff::Var out = model.forward(tape, batch, training, rng);
    if (model.config().task == dyn::TaskKind::Classification) {
        return cross_entropy(out, one_hot(batch.labels, model.config().classes));
    }
    return squared_error(out, batch.targets);
}

double evaluate_loss(Model& model, const data::Dataset& split, const data::NormStats& stats,
                     std::size_t batch_size) {
    if (split.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    data::BatchStream stream(split, stats, batch_size, diff::RngStream(0));
    diff::RngStream unused(0);
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& batch : stream.ordered()) {
        diff::Tape tape;
        total += batch_loss(tape, model, batch, false, unused).value().item() * static_cast<double>(batch.size());
        count += batch.size();
    }
    return total / static_cast<double>(count);
}

void apply_step(Model& model, AdamState& adam, const TrainConfig& config) {
    std::vector<diff::Parameter*> network;
    model.for_each_parameter([&](diff::Parameter& p) {
        if (p.group == diff::ParamGroup::Embedding) {
            sgd_step(p, config.embedding_lr);
        } else {
            network.push_back(&p);
        }
    });
    adam_step(network, adam, config.adam);
    model.for_each_parameter([](diff::Parameter& p) { p.zero_grad(); });
}

data::Dataset unmask_all(const data::Dataset& ds) {
    data::Dataset out = ds;
    const auto all = cond::ActiveSet::all(ds.catalog.size());
    for (auto& x : out.instances) x.active = all;
    return out;
}

namespace {

ModelConfig resolve_model(const TrainConfig& config, const data::Dataset& ds) {
    ModelConfig m = config.model;
    m.sensors = ds.catalog.size();
    m.task = ds.task.kind;
    m.classes = ds.task.kind == dyn::TaskKind::Classification ? ds.task.classes : 1;
    return m;
}

struct LoopSettings {
    std::size_t max_epochs;
    std::size_t batch_size;
    std::size_t patience;
};

// Shared epoch loop. `best` holds the starting checkpoint and its loss; it is
// replaced whenever validation improves.
TrainResult run_loop(Model& model, const data::Dataset& fit, const data::Dataset& val, const data::NormStats& stats,
                     const cond::SensorCatalog& catalog, const TrainConfig& config, const LoopSettings& loop,
                     Checkpoint best, diff::RngStream rng) {
    TrainResult result;
    result.checkpoint = std::move(best);
    AdamState adam;
    data::BatchStream stream(fit, stats, loop.batch_size, rng.split("batches"));
    diff::RngStream dropout_rng = rng.split("dropout");
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= loop.max_epochs; ++epoch) {
        double total = 0.0;
        std::size_t count = 0;
        bool diverged = false;
        for (const auto& batch : stream.next_epoch()) {
            diff::Tape tape;
            diff::Var loss = batch_loss(tape, model, batch, true, dropout_rng);
            const double value = loss.value().item();
            if (!std::isfinite(value)) {
                diverged = true;
                break;
            }
            tape.backward(loss);
            apply_step(model, adam, config);
            total += value * static_cast<double>(batch.size());
            count += batch.size();
        }
        if (diverged) {
            spdlog::warn("training diverged at epoch {}; keeping checkpoint from epoch {}", epoch,
                         result.checkpoint.epoch);
            result.diverged = true;
            break;
        }
        const double val_loss = evaluate_loss(model, val, stats, loop.batch_size);
        result.history.push_back({epoch, total / static_cast<double>(count), val_loss});
        if (!std::isfinite(val_loss)) {
            spdlog::warn("validation loss not finite at epoch {}; stopping", epoch);
            result.diverged = true;
            break;
        }
        if (val_loss < result.checkpoint.best_val_loss) {
            Checkpoint c = snapshot(model, catalog, stats);
            c.best_val_loss = val_loss;
            c.epoch = epoch;
            c.config_echo = result.checkpoint.config_echo;
            result.checkpoint = std::move(c);
            since_best = 0;
        } else if (++since_best >= loop.patience) {
            break;
        }
    }
    return result;
}

} // namespace

TrainResult train(const data::Dataset& train_split, const data::Dataset& val_split, const data::NormStats& stats,
                  const TrainConfig& config) {
    config.validate();
    if (train_split.size() == 0) throw ContractError("training split is empty");
    const bool all_sensors = config.variant == Variant::GruA;
    const data::Dataset fit = all_sensors ? unmask_all(train_split) : train_split;
    const data::Dataset val = all_sensors ? unmask_all(val_split) : val_split;
    const data::Dataset& monitor = val.size() > 0 ? val : fit;
    if (val.size() == 0) spdlog::warn("validation split is empty; early stopping monitors the training split");

    diff::RngStream root(config.seed);
    Model model(config.variant, resolve_model(config, fit), root.split("model").key());
    Checkpoint start = snapshot(model, fit.catalog, stats);
    start.best_val_loss = std::numeric_limits<double>::infinity();
    start.epoch = 0;
    start.config_echo = config.echo();
    return run_loop(model, fit, monitor, stats, fit.catalog, config,
                    {config.max_epochs, config.batch_size, config.patience}, std::move(start),
                    root.split("train"));
}

TrainResult fine_tune(const Checkpoint& ckpt, const data::Dataset& finetune_split, const TrainConfig& config) {
    config.validate();
    if (finetune_split.size() == 0) throw ContractError("fine-tune split is empty");
    for (const auto& x : finetune_split.instances) {
        if (x.active != finetune_split.instances.front().active) {
            throw ContractError("fine-tune instances must share one active set");
        }
    }
    TrainResult identity;
    identity.checkpoint = ckpt;
    if (config.finetune_epochs == 0) return identity;

    diff::RngStream root(config.seed);
    diff::RngStream rng = root.split("finetune");
    std::vector<std::size_t> order(finetune_split.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.split("holdout").shuffle(std::span<std::size_t>(order));
    std::size_t held = static_cast<std::size_t>(
        std::nearbyint(config.finetune_holdout * static_cast<double>(finetune_split.size())));
    if (finetune_split.size() >= 2) held = std::max<std::size_t>(held, 1);
    if (held >= finetune_split.size()) held = 0;

    data::Dataset fit = finetune_split.empty_like();
    data::Dataset val = finetune_split.empty_like();
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < held ? val : fit).instances.push_back(finetune_split.instances[order[i]]);
    }
    const data::Dataset& monitor = held > 0 ? val : fit;

    Model model = instantiate(ckpt);
    Checkpoint start = ckpt;
    start.best_val_loss = evaluate_loss(model, monitor, ckpt.stats, config.finetune_batch_size);
    start.epoch = 0;
    return run_loop(model, fit, monitor, ckpt.stats, ckpt.catalog, config,
                    {config.finetune_epochs, config.finetune_batch_size, config.finetune_patience},
                    std::move(start), rng);
}

std::vector<std::vector<double>> predict(Model& model, const data::Dataset& split, const data::NormStats& stats,
                                         std::size_t batch_size) {
    std::vector<std::vector<double>> out(split.size());
    if (split.size() == 0) return out;
    data::BatchStream stream(split, stats, batch_size, diff::RngStream(0));
    diff::RngStream unused(0);
    for (const auto& batch : stream.ordered()) {
        diff::Tape tape;
        const diff::Tensor& y = model.forward(tape, batch, false, unused).value();
        const std::size_t width = y.cols();
        for (std::size_t b = 0; b < batch.size(); ++b) {
            auto row = y.data().subspan(b * width, width);
            out[batch.members[b]].assign(row.begin(), row.end());
        }
    }
    return out;
}

} // namespace condrnn::train
