#pragma once

#include <cstddef>
#include <functional>

#include "condrnn/cond/layers.hpp"
#include "condrnn/cond/sensors.hpp"

namespace condrnn::cond {

struct ConditioningConfig {
    /// Embedding width; 0 selects floor(d / 2).
    std::size_t embedding_width = 0;
    /// Hidden width of the edge and node networks; 0 selects the embedding width.
    std::size_t hidden_width = 0;
    /// Number of hidden layers in each of the edge and node networks.
    std::size_t hidden_layers = 1;
    double dropout = 0.2;
    double leaky_slope = diff::kDefaultLeakySlope;
};

/// One learnable vector per sensor, stored as a [d x d_s] parameter.
struct EmbeddingTable {
    EmbeddingTable() = default;
    /// Rows uniform in +-1/sqrt(d_s).
    EmbeddingTable(std::size_t d, std::size_t width, const diff::RngStream& rng);

    std::size_t sensors() const { return vectors.value.shape()[0]; }
    std::size_t width() const { return vectors.value.shape()[1]; }

    diff::Parameter vectors;
};

/// Edge network f_e and node network f_n of the sensor graph.
struct ConditioningNet {
    ConditioningNet() = default;
    ConditioningNet(std::size_t width, const ConditioningConfig& config, const diff::RngStream& rng);

    std::size_t width() const { return edge.out(); }
    void for_each_parameter(const std::function<void(diff::Parameter&)>& fn);

    FeedForward edge;
    FeedForward node;
    double dropout = 0.2;
    double leaky_slope = diff::kDefaultLeakySlope;
};

/// Message from sender v_l to receiver v_k: f_e([v_k, v_l]).
diff::Var edge_message(diff::Var receiver, diff::Var sender, ConditioningNet& net, bool training,
                       diff::RngStream& rng);

/// f_n([v_k, sum of message rows]); `messages` is [m x d_s] with m >= 0.
diff::Var node_update(diff::Var node, diff::Var messages, ConditioningNet& net, bool training,
                      diff::RngStream& rng);

/// Conditioning vector for an active sensor set: one round of message
/// passing over the fully connected active subgraph (no self loops)
/// followed by a dimension-wise max over the updated node vectors.
/// Inactive embedding rows never enter the computation.
diff::Var conditioning_vector(diff::Tape& tape, const ActiveSet& active, EmbeddingTable& emb,
                              ConditioningNet& net, bool training, diff::RngStream& rng);

/// Ablation without message passing: dimension-wise max over the raw
/// embeddings of the active sensors.
diff::Var conditioning_vector_se(diff::Tape& tape, const ActiveSet& active, EmbeddingTable& emb);

} // namespace condrnn::cond
