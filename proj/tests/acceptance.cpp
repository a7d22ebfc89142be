// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "condrnn/bench/report.hpp"
#include "condrnn/data/synth.hpp"
#include "condrnn/train/grad_suite.hpp"

using namespace condrnn;
using bench::Mode;
using cond::ActiveSet;
using diff::Tensor;
using train::Variant;

namespace {

constexpr double kPermutationTol = 1e-10;
constexpr double kOracleTol = 1e-12;
constexpr double kInversionTol = 0.5;
constexpr std::size_t kMaxInversions = 1;
constexpr double kQuickBudgetS = 30.0;
constexpr double kGridBudgetS = 30.0 * 60.0;

int failures = 0;

void report(const std::string& name, bool ok, std::string detail, double seconds) {
    while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
    std::printf("%s %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

using Vec = std::vector<double>;

Vec mlp(const cond::FeedForward& ff, Vec x, double slope) {
    for (const auto& layer : ff.layers) {
        const auto& w = layer.weight.value;
        Vec y(w.shape()[1]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            double s = layer.bias.value[j];
            for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w.at(i, j);
            y[j] = s > 0 ? s : slope * s;
        }
        x = std::move(y);
    }
    return x;
}

Vec cat(Vec a, const Vec& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

Vec row(const cond::EmbeddingTable& emb, std::size_t i) {
    const auto r = emb.vectors.value.row(i);
    return Vec(r.data().begin(), r.data().end());
}

ActiveSet random_mask(std::size_t d, diff::RngStream& rng) {
    std::vector<std::uint8_t> bits(d);
    for (auto& b : bits) b = rng.bernoulli(0.5);
    bits[rng.below(d)] = 1;
    return ActiveSet(bits);
}

Vec conditioning(const ActiveSet& s, cond::EmbeddingTable& emb, cond::ConditioningNet& net) {
    diff::Tape tape;
    diff::RngStream rng(0);
    const auto v = cond::conditioning_vector(tape, s, emb, net, false, rng).value();
    return Vec(v.data().begin(), v.data().end());
}

void gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_primitive = 0.0, worst_composed = 0.0;
    bool ok = true;
    for (const auto& e : train::run_grad_suite(1)) {
        ok = ok && e.passed();
        if (e.name.rfind("model", 0) == 0) {
            worst_composed = std::max(worst_composed, e.error);
        } else {
            worst_primitive = std::max(worst_primitive, e.error);
        }
    }
    const double s = seconds_since(t0);
    report("gradient-suite", ok && s < kQuickBudgetS,
           fmt("primitives max %.2e < 1e-6, composed max %.2e < 1e-4", worst_primitive, worst_composed), s);
}

void conditioning_invariants() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t d = 10, width = 5;
    cond::ConditioningConfig cc;
    cc.dropout = 0.2;
    diff::RngStream rng(2024);
    double worst_perm = 0.0;
    bool independent = true, zero_grad = true;
    for (int trial = 0; trial < 100; ++trial) {
        cond::EmbeddingTable emb(d, width, rng.split(static_cast<std::uint64_t>(trial)));
        cond::ConditioningNet net(width, cc, rng.split(1000 + trial));
        const ActiveSet mask = random_mask(d, rng);

        std::vector<std::size_t> perm(d);
        for (std::size_t i = 0; i < d; ++i) perm[i] = i;
        rng.shuffle(std::span(perm));
        cond::EmbeddingTable permuted = emb;
        std::vector<std::uint8_t> pbits(d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t c = 0; c < width; ++c) permuted.vectors.value.at(i, c) = emb.vectors.value.at(perm[i], c);
            pbits[i] = mask.contains(perm[i]);
        }
        const Vec a = conditioning(mask, emb, net), b = conditioning(ActiveSet(pbits), permuted, net);
        for (std::size_t c = 0; c < width; ++c) worst_perm = std::max(worst_perm, std::fabs(a[c] - b[c]));

        cond::EmbeddingTable perturbed = emb;
        for (std::size_t i : mask.inactive_indices())
            for (std::size_t c = 0; c < width; ++c) perturbed.vectors.value.at(i, c) += rng.normal();
        independent = independent && conditioning(mask, perturbed, net) == a;

        diff::Tape tape;
        diff::RngStream drop(static_cast<std::uint64_t>(trial));
        auto v = cond::conditioning_vector(tape, mask, emb, net, true, drop);
        Tensor w(diff::Shape{width});
        for (auto& x : w.data()) x = rng.normal();
        tape.backward(diff::sum(diff::mul(v, tape.constant(w))));
        for (std::size_t i : mask.inactive_indices())
            for (std::size_t c = 0; c < width; ++c) zero_grad = zero_grad && emb.vectors.grad.at(i, c) == 0.0;
    }
    const double s = seconds_since(t0);
    report("conditioning-invariants",
           worst_perm <= kPermutationTol && independent && zero_grad && s < kQuickBudgetS,
           fmt("100 masks: permutation max diff %.1e <= 1e-10", worst_perm) +
               (independent ? ", inactive rows ignored bitwise" : ", INACTIVE ROWS LEAK") +
               (zero_grad ? ", inactive gradients exactly 0" : ", NONZERO INACTIVE GRADIENT"),
           s);
}

void optimizer_separation() {
    const auto t0 = std::chrono::steady_clock::now();
    data::SynthConfig sc;
    sc.sensors = 8;
    sc.instances = 120;
    sc.length = 16;
    auto ds = data::synth_generate(sc);
    const auto stats = data::compute_stats(ds);
    const std::size_t excluded = 5;
    auto bits = ActiveSet::all(8).bits();
    bits[excluded] = 0;
    bits[2] = 0;
    ds = data::remask(ds, ActiveSet(bits));

    train::TrainConfig cfg;
    cfg.model.sensors = 8;
    cfg.model.classes = sc.classes;
    cfg.model.hidden = 16;
    cfg.model.gru_layers = 1;
    cfg.adam.lr = 1e-2;
    cfg.embedding_lr = 1e-2;
    train::Model model(Variant::GruCm, cfg.model, 7);
    const Tensor before = model.embeddings().vectors.value;
    data::BatchStream stream(ds, stats, 16, diff::RngStream(3));
    auto batches = stream.next_epoch();
    train::AdamState adam;
    diff::RngStream rng(4);
    for (std::size_t step = 0; step < 10; ++step) {
        diff::Tape tape;
        tape.backward(train::batch_loss(tape, model, batches[step % batches.size()], true, rng));
        train::apply_step(model, adam, cfg);
    }
    const auto& after = model.embeddings().vectors.value;
    bool unchanged = true, active_moved = false;
    for (std::size_t c = 0; c < after.cols(); ++c) {
        unchanged = unchanged && after.at(excluded, c) == before.at(excluded, c);
        active_moved = active_moved || after.at(0, c) != before.at(0, c);
    }
    const bool embeddings_outside_adam = adam.moments.count("embeddings") == 0;
    report("optimizer-separation", unchanged && active_moved && embeddings_outside_adam,
           std::string("10 steps: excluded row ") + (unchanged ? "bit-identical" : "CHANGED") +
               (active_moved ? ", active rows updated" : ", active rows frozen") +
               (embeddings_outside_adam ? ", embeddings not in Adam state" : ", embeddings in Adam state"),
           seconds_since(t0));
}

void oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    cond::ConditioningConfig cc;
    cc.dropout = 0.0;
    cond::EmbeddingTable emb(3, 2, diff::RngStream(1));
    emb.vectors.value = Tensor::matrix({{0.5, -0.3}, {-0.8, 0.2}, {0.1, 0.9}});
    cond::ConditioningNet net(2, cc, diff::RngStream(2));
    double k = 0.3;
    for (auto* ff : {&net.edge, &net.node}) {
        for (auto& layer : ff->layers) {
            for (auto& w : layer.weight.value.data()) w = 0.8 * std::sin(k += 0.7);
            for (auto& b : layer.bias.value.data()) b = 0.3 * std::cos(k += 0.3);
        }
    }
    Vec expect;
    for (std::size_t r = 0; r < 3; ++r) {
        Vec agg(2, 0.0);
        for (std::size_t s = 0; s < 3; ++s) {
            if (s == r) continue;
            const Vec m = mlp(net.edge, cat(row(emb, r), row(emb, s)), net.leaky_slope);
            agg[0] += m[0];
            agg[1] += m[1];
        }
        const Vec u = mlp(net.node, cat(row(emb, r), agg), net.leaky_slope);
        if (expect.empty()) {
            expect = u;
        } else {
            for (std::size_t c = 0; c < 2; ++c) expect[c] = std::max(expect[c], u[c]);
        }
    }
    const Vec got = conditioning(ActiveSet::all(3), emb, net);
    double cond_err = 0.0;
    for (std::size_t c = 0; c < 2; ++c) cond_err = std::max(cond_err, std::fabs(got[c] - expect[c]));

    dyn::GruStack stack(2, 2, 1, diff::RngStream(3));
    auto& g = stack.layers[0];
    double q = 0.1;
    for (auto* p : {&g.w_z, &g.b_z, &g.w_r, &g.b_r, &g.w_h, &g.b_h})
        for (auto& v : p->value.data()) v = 0.9 * std::sin(q += 0.53);
    const Vec x{0.7, -1.2}, h{0.25, -0.4};
    auto affine = [](const Vec& in, const diff::Parameter& w, const diff::Parameter& b) {
        Vec y(w.value.shape()[1]);
        for (std::size_t j = 0; j < y.size(); ++j) {
            y[j] = b.value[j];
            for (std::size_t i = 0; i < in.size(); ++i) y[j] += in[i] * w.value.at(i, j);
        }
        return y;
    };
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const Vec az = affine(cat(x, h), g.w_z, g.b_z), ar = affine(cat(x, h), g.w_r, g.b_r);
    const Vec ah = affine(cat(x, {sig(ar[0]) * h[0], sig(ar[1]) * h[1]}), g.w_h, g.b_h);
    diff::Tape tape;
    dyn::HiddenState st;
    st.layers.push_back(tape.constant(Tensor::matrix(1, 2, h)));
    const auto next = dyn::gru_step(tape.constant(Tensor::matrix(1, 2, x)), st, stack).layers[0].value();
    double gru_err = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        const double z = sig(az[j]);
        gru_err = std::max(gru_err, std::fabs(next[j] - ((1 - z) * h[j] + z * std::tanh(ah[j]))));
    }
    report("oracle-equivalence", cond_err <= kOracleTol && gru_err <= kOracleTol,
           fmt("3-sensor brute force diff %.1e, GRU step diff %.1e (tol 1e-12)", cond_err, gru_err),
           seconds_since(t0));
}

// Desk-scale training settings for the synthetic grid.
train::TrainConfig desk_train_config() {
    train::TrainConfig t;
    t.model.hidden = 32;
    t.model.gru_layers = 1;
    t.model.dropout = 0.0;
    t.max_epochs = 80;
    t.patience = 12;
    t.adam.lr = 1e-3;
    t.embedding_lr = 5e-3;
    t.finetune_epochs = 20;
    t.finetune_patience = 5;
    return t;
}

struct GridMeans {
    std::map<std::tuple<Variant, Mode, double>, double> cell;
    double gru_a = 0.0;
};

GridMeans means_of(const bench::BenchReport& r) {
    GridMeans g;
    for (const auto& [key, agg] : bench::aggregate(r)) {
        const auto& [variant, f_tr, f_te, mode] = key;
        (void)f_tr;
        if (variant == Variant::GruA) {
            g.gru_a = agg.mean;
        } else {
            g.cell[{variant, mode, f_te}] = agg.mean;
        }
    }
    return g;
}

void synthetic_properties() {
    const auto t0 = std::chrono::steady_clock::now();
    const data::SynthConfig sc;  // d = 12, K = 4, N = 800, T = 32
    const auto ds = data::synth_generate(sc);
    bench::BenchConfig bc;
    bc.f_tr = {0.25};
    bc.modes = {Mode::ZeroShot, Mode::FineTune, Mode::Scratch};
    bc.train = desk_train_config();
    const auto rep = bench::run_benchmark(ds, bc);
    const double s = seconds_since(t0);
    bench::write_table(std::cout, rep);

    bool failed_cells = false;
    for (const auto& c : rep.cells) failed_cells = failed_cells || !c.failure.empty();
    const auto g = means_of(rep);
    const auto at = [&](Variant v, Mode m, double f) { return g.cell.at({v, m, f}); };
    const std::vector<Variant> masked{Variant::Gru, Variant::GruSe, Variant::GruCm};

    std::string detail;
    bool ok = !failed_cells && s < kGridBudgetS;
    for (double f : {0.4, 0.5}) {
        const double cm = at(Variant::GruCm, Mode::ZeroShot, f), gru = at(Variant::Gru, Mode::ZeroShot, f);
        ok = ok && cm <= gru;
        detail += fmt("f_te=%.2f: ", f) + fmt("GRU-CM %.2f vs GRU %.2f; ", cm, gru);
    }
    report("synthetic-a-cm-vs-gru", ok, detail, s);

    double worst_margin = 1e300;
    bool b_ok = !failed_cells;
    for (Variant v : masked)
        for (Mode m : {Mode::ZeroShot, Mode::FineTune})
            for (double f : bc.f_te) {
                worst_margin = std::min(worst_margin, at(v, m, f) - g.gru_a);
                b_ok = b_ok && g.gru_a <= at(v, m, f);
            }
    report("synthetic-b-gru-a-bound", b_ok,
           fmt("GRU-A %.2f, smallest margin to any masked cell %.2f", g.gru_a, worst_margin), 0.0);

    bool c_ok = !failed_cells;
    detail.clear();
    for (Variant v : {Variant::Gru, Variant::GruCm}) {
        for (double f : bc.f_te) {
            const double ft = at(v, Mode::FineTune, f), zs = at(v, Mode::ZeroShot, f);
            if (ft > zs) {
                c_ok = false;
                detail += train::to_string(v) + fmt(" f_te=%.2f: fine-tune %.2f", f) + fmt(" > zero-shot %.2f; ", zs);
            }
        }
    }
    report("synthetic-c-finetune-helps", c_ok,
           detail.empty() ? "fine-tune <= zero-shot for GRU and GRU-CM at every f_te" : detail, 0.0);

    bool d_ok = !failed_cells;
    detail.clear();
    for (Variant v : masked) {
        std::size_t inversions = 0;
        double worst = 0.0;
        for (std::size_t i = 1; i < bc.f_te.size(); ++i) {
            const double drop = at(v, Mode::ZeroShot, bc.f_te[i - 1]) - at(v, Mode::ZeroShot, bc.f_te[i]);
            if (drop > 0.0) {
                ++inversions;
                worst = std::max(worst, drop);
            }
        }
        d_ok = d_ok && inversions <= kMaxInversions && worst <= kInversionTol;
        detail += train::to_string(v) + fmt(": %.0f inversion(s), largest %.2f; ", double(inversions), worst);
    }
    report("synthetic-d-degradation", d_ok, detail, 0.0);

    bool scratch_ok = !failed_cells;
    detail.clear();
    for (double f : bc.f_te) {
        const double sc_err = at(Variant::Gru, Mode::Scratch, f), ft = at(Variant::Gru, Mode::FineTune, f);
        scratch_ok = scratch_ok && sc_err >= ft;
        detail += fmt("f_te=%.2f: ", f) + fmt("scratch %.2f vs fine-tune %.2f; ", sc_err, ft);
    }
    report("scratch-direction", scratch_ok, detail, 0.0);
}

void reproducibility() {
    const auto t0 = std::chrono::steady_clock::now();
    data::SynthConfig sc;
    sc.instances = 400;
    const auto ds = data::synth_generate(sc);
    bench::BenchConfig bc;
    bc.variants = {Variant::Gru, Variant::GruCm, Variant::GruA};
    bc.f_tr = {0.25};
    bc.f_te = {0.25, 0.5};
    bc.seeds = {1, 2};
    bc.train = desk_train_config();
    bc.train.max_epochs = 10;
    const auto first = bench::report_digest(bench::run_benchmark(ds, bc));
    const auto second = bench::report_digest(bench::run_benchmark(ds, bc));
    report("reproducibility", first == second,
           "report digest " + data::hex_digest(first) + (first == second ? " == " : " != ") + data::hex_digest(second),
           seconds_since(t0));
}

} // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    gradient_suite();
    conditioning_invariants();
    optimizer_separation();
    oracle_equivalence();
    reproducibility();
    synthetic_properties();
    std::printf("%s: %d criterion line(s) failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
