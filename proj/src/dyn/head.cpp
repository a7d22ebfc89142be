#include "condrnn/dyn/head.hpp"

#include "condrnn/error.hpp"

namespace condrnn::dyn {

using diff::Tensor;
using diff::Var;

OutputHead::OutputHead(std::size_t hidden, TaskKind task, std::size_t classes, std::size_t relu_layers,
                       double dropout, const diff::RngStream& rng)
    : task(task), dropout(dropout) {
    if (task == TaskKind::Classification && classes < 2) throw ConfigError("classification head needs K >= 2");
    std::vector<std::size_t> widths{hidden};
    for (std::size_t i = 0; i < relu_layers; ++i) widths.push_back(hidden);
    widths.push_back(task == TaskKind::Classification ? classes : 1);
    net = cond::FeedForward("head", widths, cond::Activation::Relu, false, rng);
}

Var OutputHead::forward(diff::Tape& tape, Var features, bool training, diff::RngStream& rng) {
    Var logits = net.forward(tape, features, 1.0, dropout, training, rng);
    return task == TaskKind::Classification ? diff::softmax(logits) : diff::sigmoid(logits);
}

Var forward_batch(diff::Tape& tape, std::span<const Var> steps, std::optional<Var> cond, GruStack& stack,
                  OutputHead& head, bool training, diff::RngStream& rng) {
    if (steps.empty()) throw ContractError("forward: empty sequence (T = 0)");
    const std::size_t batch = steps.front().value().shape()[0];
    std::optional<Var> tiled;
    if (cond) tiled = diff::tile_rows(*cond, batch);
    HiddenState state = stack.zero_state(tape, batch);
    for (const Var& x : steps) {
        if (x.value().rank() != 2 || x.value().shape()[0] != batch) {
            throw DimensionError("forward: every step must be [B x d] with a common B");
        }
        state = gru_step(tiled ? diff::concat(x, *tiled) : x, state, stack);
    }
    return head.forward(tape, state.layers.back(), training, rng);
}

Var forward_sequence(diff::Tape& tape, const Tensor& series, std::optional<Var> cond, GruStack& stack,
                     OutputHead& head, bool training, diff::RngStream& rng) {
    if (series.rank() != 2) throw DimensionError("forward_sequence: series must be [T x d]");
    const std::size_t t_len = series.shape()[0], d = series.shape()[1];
    if (t_len == 0) throw ContractError("forward_sequence: empty sequence (T = 0)");
    std::vector<Var> steps;
    steps.reserve(t_len);
    for (std::size_t t = 0; t < t_len; ++t) steps.push_back(tape.constant(series.row(t).reshaped({1, d})));
    Var out = forward_batch(tape, steps, cond, stack, head, training, rng);
    return diff::reshape(out, diff::Shape{out.value().size()});
}

std::size_t predict_label(std::span<const double> p) {
    if (p.empty()) throw ContractError("predict_label: empty probability vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

double denormalize_rul(double y, double min, double max) { return y * (max - min) + min; }

double normalize_rul(double rul, double min, double max) {
    if (!(max > min)) throw ContractError("normalize_rul: max must exceed min");
    return (rul - min) / (max - min);
}

} // namespace condrnn::dyn
