#include "condrnn/train/grad_suite.hpp"

#include "condrnn/diff/ops.hpp"
#include "condrnn/train/losses.hpp"

namespace condrnn::train {

namespace {

using diff::Parameter;
using diff::Tape;
using diff::Tensor;
using diff::Var;

Tensor random_tensor(diff::Shape shape, diff::RngStream& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

// Random linear functional of `out`, so every output coordinate matters.
Var project(Tape& tape, Var out, std::uint64_t seed) {
    diff::RngStream rng(seed);
    Tensor w = random_tensor(out.shape(), rng);
    return diff::sum(diff::mul(out, tape.constant(std::move(w))));
}

GradSuiteEntry check(const std::string& name, std::vector<Parameter>& params,
                     const std::function<Var(Tape&, std::vector<Var>&)>& op) {
    std::vector<Parameter*> ptrs;
    for (auto& p : params) ptrs.push_back(&p);
    auto loss = [&](Tape& tape) {
        std::vector<Var> vars;
        for (auto& p : params) vars.push_back(tape.parameter(p));
        return project(tape, op(tape, vars), 99);
    };
    const auto r = diff::grad_check(loss, ptrs);
    return {name, r.max_rel_error, kPrimitiveTolerance, r.coordinates};
}

} // namespace

GradSuiteEntry check_composed(Variant variant, dyn::TaskKind task, std::uint64_t seed) {
    ModelConfig mc;
    mc.sensors = 4;
    mc.task = task;
    mc.classes = task == dyn::TaskKind::Classification ? 3 : 1;
    mc.embedding_width = 2;
    mc.gru_layers = 2;
    mc.hidden = 8;
    // Dropout can zero a whole hidden row, leaving a pre-activation exactly at
    // the zero bias where leaky ReLU and max are not differentiable.
    mc.dropout = 0.0;
    Model model(variant, mc, seed);

    diff::RngStream rng(seed + 17);
    data::MiniBatch batch{cond::ActiveSet::parse("1101"), random_tensor({3, 3, 4}, rng), {0, 2, 1}, {}, {0, 1, 2}};
    for (std::size_t i = 0; i < 3; ++i) batch.targets.push_back(rng.uniform());
    // Inactive column imputed with zero, as the batch stream would.
    for (std::size_t i = 0; i < 9; ++i) batch.inputs.data()[i * 4 + 2] = 0.0;

    auto loss = [&](Tape& tape) {
        diff::RngStream drop(seed + 31);
        Var out = model.forward(tape, batch, true, drop);
        if (task == dyn::TaskKind::Classification) return cross_entropy(out, one_hot(batch.labels, mc.classes));
        return squared_error(out, batch.targets);
    };
    const auto params = model.parameters();
    const auto r = diff::grad_check(loss, params);
    const std::string name = "model " + to_string(variant) + (task == dyn::TaskKind::Classification ? " (ce)" : " (mse)");
    return {name, r.max_rel_error, kComposedTolerance, r.coordinates};
}

std::vector<GradSuiteEntry> run_grad_suite(std::uint64_t seed) {
    diff::RngStream rng(seed);
    auto param = [&](const std::string& name, diff::Shape shape, double lo = -1.0, double hi = 1.0) {
        return Parameter(name, random_tensor(std::move(shape), rng, lo, hi));
    };
    std::vector<GradSuiteEntry> out;
    auto run = [&](const std::string& name, std::vector<Parameter> params,
                   const std::function<Var(Tape&, std::vector<Var>&)>& op) {
        out.push_back(check(name, params, op));
    };

    run("matmul", {param("a", {3, 4}), param("b", {4, 2})}, [](Tape&, auto& v) { return diff::matmul(v[0], v[1]); });
    run("add", {param("a", {3, 4}), param("b", {3, 4})}, [](Tape&, auto& v) { return diff::add(v[0], v[1]); });
    run("sub", {param("a", {3, 4}), param("b", {3, 4})}, [](Tape&, auto& v) { return diff::sub(v[0], v[1]); });
    run("mul", {param("a", {3, 4}), param("b", {3, 4})}, [](Tape&, auto& v) { return diff::mul(v[0], v[1]); });
    run("scale", {param("a", {3, 4})}, [](Tape&, auto& v) { return diff::scale(v[0], -2.5); });
    run("add_row_bias", {param("x", {3, 4}), param("b", {4})},
        [](Tape&, auto& v) { return diff::add_row_bias(v[0], v[1]); });
    // Keep inputs away from the kink at zero.
    run("leaky_relu", {param("x", {3, 4}, 0.05, 1.0)}, [](Tape& t, auto& v) {
        return diff::leaky_relu(diff::sub(v[0], t.constant(Tensor::filled({3, 4}, 0.5))));
    });
    run("relu", {param("x", {3, 4}, 0.05, 1.0)}, [](Tape& t, auto& v) {
        return diff::relu(diff::sub(v[0], t.constant(Tensor::filled({3, 4}, 0.5))));
    });
    run("sigmoid", {param("x", {3, 4}, -3.0, 3.0)}, [](Tape&, auto& v) { return diff::sigmoid(v[0]); });
    run("tanh", {param("x", {3, 4}, -2.0, 2.0)}, [](Tape&, auto& v) { return diff::tanh(v[0]); });
    run("dropout", {param("x", {3, 4})}, [](Tape&, auto& v) {
        diff::RngStream r(5);
        return diff::dropout(v[0], 0.3, true, r);
    });
    run("rowwise_max", {param("x", {5, 3})}, [](Tape&, auto& v) { return diff::rowwise_max(v[0]); });
    run("reduce_sum_rows", {param("x", {5, 3})}, [](Tape&, auto& v) { return diff::reduce_sum_rows(v[0]); });
    run("segment_sum_rows", {param("x", {6, 3})}, [](Tape&, auto& v) {
        const std::size_t seg[] = {0, 2, 1, 0, 2, 2};
        return diff::segment_sum_rows(v[0], seg, 3);
    });
    run("gather_rows", {param("x", {4, 3})}, [](Tape&, auto& v) {
        const std::size_t rows[] = {3, 0, 3, 1};
        return diff::gather_rows(v[0], rows);
    });
    run("tile_rows", {param("v", {3})}, [](Tape&, auto& v) { return diff::tile_rows(v[0], 4); });
    run("concat", {param("a", {3, 2}), param("b", {3, 4})}, [](Tape&, auto& v) { return diff::concat(v[0], v[1]); });
    run("reshape", {param("x", {3, 4})}, [](Tape&, auto& v) { return diff::reshape(v[0], {2, 6}); });
    run("softmax", {param("x", {3, 4}, -2.0, 2.0)}, [](Tape&, auto& v) { return diff::softmax(v[0]); });
    run("sum", {param("x", {3, 4})}, [](Tape&, auto& v) { return diff::sum(v[0]); });
    run("mean", {param("x", {3, 4})}, [](Tape&, auto& v) { return diff::mean(v[0]); });
    run("cross_entropy", {param("x", {3, 4}, -2.0, 2.0)}, [](Tape&, auto& v) {
        const std::size_t labels[] = {1, 3, 0};
        return cross_entropy(diff::softmax(v[0]), one_hot(labels, 4));
    });
    run("squared_error", {param("x", {3, 1}, 0.0, 1.0)}, [](Tape&, auto& v) {
        const double t[] = {0.2, 0.9, 0.5};
        return squared_error(v[0], t);
    });

    for (auto v : {Variant::Gru, Variant::GruSe, Variant::GruCm}) {
        out.push_back(check_composed(v, dyn::TaskKind::Classification, seed));
    }
    out.push_back(check_composed(Variant::GruCm, dyn::TaskKind::Regression, seed));
    return out;
}

} // namespace condrnn::train
