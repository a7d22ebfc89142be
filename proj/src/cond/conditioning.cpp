#include "condrnn/cond/conditioning.hpp"

#include <cmath>

#include "condrnn/error.hpp"

namespace condrnn::cond {

using diff::Tensor;
using diff::Var;

EmbeddingTable::EmbeddingTable(std::size_t d, std::size_t width, const diff::RngStream& rng) {
    if (d == 0 || width == 0) throw ConfigError("embedding table needs positive extents");
    auto stream = rng.split("embeddings");
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    Tensor v(diff::Shape{d, width});
    for (auto& x : v.data()) x = stream.uniform(-bound, bound);
    vectors = diff::Parameter("embeddings", std::move(v), diff::ParamGroup::Embedding);
}

ConditioningNet::ConditioningNet(std::size_t width, const ConditioningConfig& config,
                                 const diff::RngStream& rng)
    : dropout(config.dropout), leaky_slope(config.leaky_slope) {
    const std::size_t hidden = config.hidden_width ? config.hidden_width : width;
    std::vector<std::size_t> widths{2 * width};
    for (std::size_t i = 0; i < config.hidden_layers; ++i) widths.push_back(hidden);
    widths.push_back(width);
    edge = FeedForward("cond.edge", widths, Activation::LeakyRelu, true, rng);
    node = FeedForward("cond.node", widths, Activation::LeakyRelu, true, rng);
}

void ConditioningNet::for_each_parameter(const std::function<void(diff::Parameter&)>& fn) {
    edge.for_each_parameter(fn);
    node.for_each_parameter(fn);
}

Var edge_message(Var receiver, Var sender, ConditioningNet& net, bool training, diff::RngStream& rng) {
    const auto w = net.width();
    if (receiver.value().rank() != 1 || sender.value().rank() != 1 || receiver.value().size() != w ||
        sender.value().size() != w) {
        throw DimensionError("edge_message: expected two vectors of width " + std::to_string(w) + ", got " +
                             diff::shape_string(receiver.shape()) + " and " +
                             diff::shape_string(sender.shape()));
    }
    Var x = diff::reshape(diff::concat(receiver, sender), diff::Shape{1, 2 * w});
    Var m = net.edge.forward(*receiver.tape, x, net.leaky_slope, net.dropout, training, rng);
    return diff::reshape(m, diff::Shape{w});
}

Var node_update(Var node, Var messages, ConditioningNet& net, bool training, diff::RngStream& rng) {
    const auto w = net.width();
    if (node.value().rank() != 1 || node.value().size() != w) {
        throw DimensionError("node_update: node vector must have width " + std::to_string(w));
    }
    Var agg = diff::reduce_sum_rows(messages);
    if (agg.value().size() != w) throw DimensionError("node_update: message width mismatch");
    Var x = diff::reshape(diff::concat(node, agg), diff::Shape{1, 2 * w});
    Var out = net.node.forward(*node.tape, x, net.leaky_slope, net.dropout, training, rng);
    return diff::reshape(out, diff::Shape{w});
}

Var conditioning_vector(diff::Tape& tape, const ActiveSet& active, EmbeddingTable& emb, ConditioningNet& net,
                        bool training, diff::RngStream& rng) {
    if (active.universe() != emb.sensors()) {
        throw DimensionError("conditioning_vector: active set over " + std::to_string(active.universe()) +
                             " sensors, table has " + std::to_string(emb.sensors()));
    }
    const auto idx = active.indices();
    if (idx.empty()) throw EmptySetError("conditioning_vector: empty active set");
    const std::size_t n = idx.size();

    Var nodes = diff::gather_rows(tape.parameter(emb.vectors), idx);

    // Every ordered pair (k, l), k != l, carries the message l -> k.
    std::vector<std::size_t> receivers, senders;
    receivers.reserve(n * (n - 1));
    senders.reserve(n * (n - 1));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            if (k == l) continue;
            receivers.push_back(k);
            senders.push_back(l);
        }
    }
    Var pairs = diff::concat(diff::gather_rows(nodes, receivers), diff::gather_rows(nodes, senders));
    Var messages = net.edge.forward(tape, pairs, net.leaky_slope, net.dropout, training, rng);
    Var aggregated = diff::segment_sum_rows(messages, receivers, n);
    Var updated = net.node.forward(tape, diff::concat(nodes, aggregated), net.leaky_slope, net.dropout,
                                   training, rng);
    return diff::rowwise_max(updated);
}

Var conditioning_vector_se(diff::Tape& tape, const ActiveSet& active, EmbeddingTable& emb) {
    if (active.universe() != emb.sensors()) {
        throw DimensionError("conditioning_vector_se: active set does not match the embedding table");
    }
    const auto idx = active.indices();
    if (idx.empty()) throw EmptySetError("conditioning_vector_se: empty active set");
    return diff::rowwise_max(diff::gather_rows(tape.parameter(emb.vectors), idx));
}

} // namespace condrnn::cond
