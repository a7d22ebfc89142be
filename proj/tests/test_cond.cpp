#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "condrnn/cond/conditioning.hpp"
#include "condrnn/error.hpp"

using namespace condrnn;
using namespace condrnn::cond;
using diff::Tensor;

namespace {

using Vec = std::vector<double>;

ConditioningConfig config(std::size_t hidden_layers, double slope = 0.01) {
    ConditioningConfig c;
    c.hidden_layers = hidden_layers;
    c.dropout = 0.0;
    c.leaky_slope = slope;
    return c;
}

void set_weights(FeedForward& ff, double offset) {
    double k = offset;
    for (auto& layer : ff.layers) {
        for (auto& w : layer.weight.value.data()) {
            w = std::sin(k) * 0.8;
            k += 0.7;
        }
        for (auto& b : layer.bias.value.data()) {
            b = std::cos(k) * 0.3;
            k += 0.3;
        }
    }
}

void zero_weights(FeedForward& ff) {
    for (auto& layer : ff.layers) {
        layer.weight.value.fill(0.0);
        layer.bias.value.fill(0.0);
    }
}

// Single layer [2w -> w] that copies the first block.
void passthrough(FeedForward& ff) {
    ASSERT_EQ(ff.layers.size(), 1u);
    auto& w = ff.layers[0].weight.value;
    w.fill(0.0);
    for (std::size_t i = 0; i < ff.out(); ++i) w.at(i, i) = 1.0;
    ff.layers[0].bias.value.fill(0.0);
}

// Plain-loop evaluation of a leaky ReLU MLP on one input row.
Vec mlp(const FeedForward& ff, Vec x, double slope) {
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

Vec cat(const Vec& a, const Vec& b) {
    Vec r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

Vec row(const EmbeddingTable& emb, std::size_t i) {
    const auto r = emb.vectors.value.row(i);
    return Vec(r.data().begin(), r.data().end());
}

Vec brute_force(const ActiveSet& active, const EmbeddingTable& emb, const ConditioningNet& net) {
    const auto idx = active.indices();
    const double slope = net.leaky_slope;
    Vec result;
    for (std::size_t k : idx) {
        Vec agg(emb.width(), 0.0);
        for (std::size_t l : idx) {
            if (l == k) continue;
            const Vec m = mlp(net.edge, cat(row(emb, k), row(emb, l)), slope);
            for (std::size_t c = 0; c < agg.size(); ++c) agg[c] += m[c];
        }
        const Vec updated = mlp(net.node, cat(row(emb, k), agg), slope);
        if (result.empty()) {
            result = updated;
        } else {
            for (std::size_t c = 0; c < result.size(); ++c) result[c] = std::max(result[c], updated[c]);
        }
    }
    return result;
}

Vec eval(const ActiveSet& active, EmbeddingTable& emb, ConditioningNet& net) {
    diff::Tape tape;
    diff::RngStream rng(0);
    auto v = conditioning_vector(tape, active, emb, net, false, rng).value();
    return Vec(v.data().begin(), v.data().end());
}

struct Fixture {
    Fixture(std::size_t d, std::size_t width, std::size_t hidden_layers, double slope = 0.01)
        : emb(d, width, diff::RngStream(3)), net(width, config(hidden_layers, slope), diff::RngStream(4)) {}
    EmbeddingTable emb;
    ConditioningNet net;
};

} // namespace

TEST(Sensors, MaskedCountRoundsHalfToEven) {
    EXPECT_EQ(masked_count(0.1, 45), 4u);
    EXPECT_EQ(masked_count(0.25, 8), 2u);
    EXPECT_EQ(masked_count(0.5, 9), 4u);
    EXPECT_EQ(masked_count(0.5, 5), 2u);
    EXPECT_EQ(masked_count(0.0, 5), 0u);
}

TEST(Sensors, ActiveSetRejectsEmptyMask) {
    EXPECT_THROW(ActiveSet(std::vector<std::uint8_t>{0, 0, 0}), Error);
    const auto a = ActiveSet::parse("1011");
    EXPECT_EQ(a.count(), 3u);
    EXPECT_EQ(a.inactive_indices(), std::vector<std::size_t>{1});
    EXPECT_EQ(a.to_string(), "1011");
}

TEST(Sensors, OverlapAndUnion) {
    const auto a = ActiveSet::parse("1100"), b = ActiveSet::parse("0110");
    EXPECT_EQ(a.overlap(b), 1u);
    EXPECT_EQ(a.union_size(b), 3u);
    EXPECT_TRUE(ActiveSet::parse("0100").is_subset_of(a));
    EXPECT_THROW(a.intersect(ActiveSet::parse("0011")), EmptySetError);
}

TEST(Sensors, CatalogLookup) {
    SensorCatalog cat({"acc_x", "acc_y", "gyro"});
    EXPECT_EQ(cat.index_of("gyro"), 2u);
    EXPECT_THROW(cat.index_of("mag"), ContractError);
    EXPECT_NE(cat.digest(), SensorCatalog({"acc_x", "gyro", "acc_y"}).digest());
}

TEST(EdgeMessage, ZeroNetworkGivesZeroMessage) {
    Fixture f(4, 2, 1);
    zero_weights(f.net.edge);
    diff::Tape tape;
    diff::RngStream rng(1);
    auto m = edge_message(tape.constant(Tensor::vector({0.3, -2.0})), tape.constant(Tensor::vector({5.0, 1.0})),
                          f.net, false, rng);
    EXPECT_EQ(m.value(), Tensor::vector({0.0, 0.0}));
}

TEST(EdgeMessage, MatchesScriptedOracleAndIsDirectional) {
    Fixture f(4, 2, 1);
    set_weights(f.net.edge, 0.1);
    diff::Tape tape;
    diff::RngStream rng(1);
    const Vec a{0.4, -0.7}, b{-0.2, 0.9};
    auto kl = edge_message(tape.constant(Tensor::vector(a)), tape.constant(Tensor::vector(b)), f.net, false, rng);
    auto lk = edge_message(tape.constant(Tensor::vector(b)), tape.constant(Tensor::vector(a)), f.net, false, rng);
    const Vec expect = mlp(f.net.edge, cat(a, b), f.net.leaky_slope);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(kl.value()[c], expect[c], 1e-14);
    EXPECT_NE(kl.value(), lk.value());
}

TEST(EdgeMessage, DuplicatedEmbeddings) {
    Fixture f(4, 2, 1);
    set_weights(f.net.edge, 0.2);
    diff::Tape tape;
    diff::RngStream rng(1);
    const Vec v{0.5, 0.25};
    auto m = edge_message(tape.constant(Tensor::vector(v)), tape.constant(Tensor::vector(v)), f.net, false, rng);
    const Vec expect = mlp(f.net.edge, cat(v, v), f.net.leaky_slope);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(m.value()[c], expect[c], 1e-14);
}

TEST(EdgeMessage, WidthMismatchIsDimensionError) {
    Fixture f(4, 2, 1);
    diff::Tape tape;
    diff::RngStream rng(1);
    EXPECT_THROW(edge_message(tape.constant(Tensor::vector({1, 2, 3})), tape.constant(Tensor::vector({1, 2})), f.net,
                              false, rng),
                 DimensionError);
}

TEST(NodeUpdate, EmptyNeighbourhood) {
    Fixture f(4, 2, 1);
    set_weights(f.net.node, 0.4);
    diff::Tape tape;
    diff::RngStream rng(1);
    const Vec v{0.3, -0.6};
    auto out = node_update(tape.constant(Tensor::vector(v)), tape.constant(Tensor(diff::Shape{0, 2})), f.net, false, rng);
    const Vec expect = mlp(f.net.node, cat(v, {0.0, 0.0}), f.net.leaky_slope);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(out.value()[c], expect[c], 1e-14);
}

TEST(NodeUpdate, PassthroughReproducesLeakyRelu) {
    Fixture f(4, 3, 0);
    passthrough(f.net.node);
    diff::Tape tape;
    diff::RngStream rng(1);
    auto out = node_update(tape.constant(Tensor::vector({1.5, -2.0, 0.0})),
                           tape.constant(Tensor::matrix({{9, 9, 9}, {-4, 1, 2}})), f.net, false, rng);
    EXPECT_DOUBLE_EQ(out.value()[0], 1.5);
    EXPECT_DOUBLE_EQ(out.value()[1], -0.02);
    EXPECT_DOUBLE_EQ(out.value()[2], 0.0);
}

TEST(NodeUpdate, MessageOrderDoesNotMatter) {
    Fixture f(4, 2, 1);
    set_weights(f.net.node, 0.9);
    diff::Tape tape;
    diff::RngStream rng(1);
    auto node = tape.constant(Tensor::vector({0.1, 0.2}));
    auto a = node_update(node, tape.constant(Tensor::matrix({{1, 2}, {3, -4}, {0.5, 0.25}})), f.net, false, rng);
    auto b = node_update(node, tape.constant(Tensor::matrix({{0.5, 0.25}, {1, 2}, {3, -4}})), f.net, false, rng);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(a.value()[c], b.value()[c], 1e-12);
}

TEST(Conditioning, SingletonSet) {
    Fixture f(5, 2, 1);
    set_weights(f.net.node, 1.3);
    set_weights(f.net.edge, 2.1);
    const auto active = ActiveSet::parse("00100");
    const Vec expect = mlp(f.net.node, cat(row(f.emb, 2), {0.0, 0.0}), f.net.leaky_slope);
    const Vec got = eval(active, f.emb, f.net);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got[c], expect[c], 1e-14);
}

TEST(Conditioning, IdenticalEmbeddingsGiveIdenticalUpdates) {
    Fixture f(4, 2, 1);
    for (std::size_t c = 0; c < 2; ++c) f.emb.vectors.value.at(3, c) = f.emb.vectors.value.at(0, c);
    const auto active = ActiveSet::parse("1001");
    const Vec v0 = row(f.emb, 0);
    const Vec m = mlp(f.net.edge, cat(v0, v0), f.net.leaky_slope);
    const Vec expect = mlp(f.net.node, cat(v0, m), f.net.leaky_slope);
    const Vec got = eval(active, f.emb, f.net);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got[c], expect[c], 1e-14);
}

TEST(Conditioning, ThreeSensorsMatchBruteForceOverSixEdges) {
    Fixture f(3, 2, 1);
    set_weights(f.net.edge, 0.3);
    set_weights(f.net.node, 1.7);
    f.emb.vectors.value = Tensor::matrix({{0.5, -0.3}, {-0.8, 0.2}, {0.1, 0.9}});
    const auto active = ActiveSet::all(3);
    const Vec expect = brute_force(active, f.emb, f.net);
    const Vec got = eval(active, f.emb, f.net);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got[c], expect[c], 1e-12);
}

TEST(Conditioning, MismatchedUniverseIsError) {
    Fixture f(3, 2, 1);
    diff::Tape tape;
    diff::RngStream rng(0);
    EXPECT_THROW(conditioning_vector_se(tape, ActiveSet::all(4), f.emb), DimensionError);
}

TEST(ConditioningSe, MaxOverRawEmbeddings) {
    EmbeddingTable emb(2, 2, diff::RngStream(1));
    emb.vectors.value = Tensor::matrix({{1, -1}, {0, 3}});
    diff::Tape tape;
    EXPECT_EQ(conditioning_vector_se(tape, ActiveSet::all(2), emb).value(), Tensor::vector({1, 3}));
    EXPECT_EQ(conditioning_vector_se(tape, ActiveSet::parse("10"), emb).value(), Tensor::vector({1, -1}));
}

TEST(ConditioningSe, EqualsPassthroughConditioning) {
    Fixture f(6, 3, 0, 1.0);
    zero_weights(f.net.edge);
    passthrough(f.net.node);
    const auto active = ActiveSet::parse("110101");
    diff::Tape tape;
    const auto se = conditioning_vector_se(tape, active, f.emb).value();
    const Vec got = eval(active, f.emb, f.net);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(got[c], se[c], 1e-15);
}

TEST(ConditioningSe, SupersetDominatesCoordinatewise) {
    EmbeddingTable emb(8, 4, diff::RngStream(6));
    diff::RngStream rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> bits(8, 0);
        bits[rng.below(8)] = 1;
        for (auto& b : bits)
            if (rng.bernoulli(0.3)) b = 1;
        ActiveSet a(bits);
        auto inactive = a.inactive_indices();
        if (inactive.empty()) continue;
        bits[inactive[rng.below(inactive.size())]] = 1;
        ActiveSet bigger(bits);
        diff::Tape tape;
        const auto va = conditioning_vector_se(tape, a, emb).value();
        const auto vb = conditioning_vector_se(tape, bigger, emb).value();
        for (std::size_t c = 0; c < 4; ++c) EXPECT_LE(va[c], vb[c]);
    }
}

TEST(Conditioning, PermutationInvariance) {
    // Reordering the catalog reorders the enumeration of active nodes.
    Fixture f(5, 3, 1);
    set_weights(f.net.edge, 0.5);
    set_weights(f.net.node, 2.5);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    EmbeddingTable permuted = f.emb;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t c = 0; c < 3; ++c) permuted.vectors.value.at(i, c) = f.emb.vectors.value.at(perm[i], c);
    const auto active = ActiveSet::parse("11011");
    std::vector<std::uint8_t> pbits(5);
    for (std::size_t i = 0; i < 5; ++i) pbits[i] = active.contains(perm[i]);
    const Vec a = eval(active, f.emb, f.net);
    const Vec b = eval(ActiveSet(pbits), permuted, f.net);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], 1e-10);
}

TEST(Conditioning, InactiveRowsAreIgnoredBitwise) {
    Fixture f(6, 3, 1);
    const auto active = ActiveSet::parse("101100");
    const Vec before = eval(active, f.emb, f.net);
    for (std::size_t i : active.inactive_indices())
        for (std::size_t c = 0; c < 3; ++c) f.emb.vectors.value.at(i, c) += 17.0 * (c + 1);
    EXPECT_EQ(eval(active, f.emb, f.net), before);
}

TEST(Conditioning, InactiveRowsReceiveZeroGradient) {
    Fixture f(6, 3, 1);
    f.net.dropout = 0.2;
    const auto active = ActiveSet::parse("011010");
    diff::Tape tape;
    diff::RngStream rng(2);
    auto v = conditioning_vector(tape, active, f.emb, f.net, true, rng);
    tape.backward(diff::sum(diff::mul(v, tape.constant(Tensor::vector({1.0, -2.0, 0.5})))));
    for (std::size_t i : active.inactive_indices())
        for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(f.emb.vectors.grad.at(i, c), 0.0);
}

TEST(Conditioning, AcceptsEveryNonemptyMask) {
    const std::size_t d = 6;
    Fixture f(d, 3, 1);
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        std::vector<std::uint8_t> bits(d);
        for (std::size_t i = 0; i < d; ++i) bits[i] = (mask >> i) & 1u;
        const ActiveSet active(bits);
        const Vec got = eval(active, f.emb, f.net);
        const Vec expect = brute_force(active, f.emb, f.net);
        ASSERT_EQ(got.size(), 3u);
        for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(got[c], expect[c], 1e-12);
    }
}

TEST(Conditioning, DefaultWidths) {
    ConditioningConfig c;
    ConditioningNet net(4, c, diff::RngStream(1));
    EXPECT_EQ(net.edge.in(), 8u);
    EXPECT_EQ(net.node.in(), 8u);
    EXPECT_EQ(net.edge.layers.size(), 2u);
    EXPECT_EQ(net.width(), 4u);
}
