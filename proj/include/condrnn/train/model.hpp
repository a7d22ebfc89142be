#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "condrnn/cond/conditioning.hpp"
#include "condrnn/data/batching.hpp"
#include "condrnn/dyn/head.hpp"

namespace condrnn::train {

/// GRU: mean-imputed input only. GRU-SE: max over raw embeddings. GRU-CM:
/// graph conditioning module. GRU-A: plain GRU trained and tested with all
/// sensors available.
enum class Variant { Gru, GruSe, GruCm, GruA };

std::string to_string(Variant v);
/// Accepts gru, gru-se, gru-cm, gru-a (case-insensitive).
Variant parse_variant(const std::string& s);
bool uses_embeddings(Variant v);
/// Every variant except GRU-A trains on masked combinations.
bool uses_masking(Variant v);

struct ModelConfig {
    std::size_t sensors = 0;
    dyn::TaskKind task = dyn::TaskKind::Classification;
    std::size_t classes = 0;
    /// Embedding / conditioning width; 0 selects floor(d / 2).
    std::size_t embedding_width = 0;
    std::size_t gru_layers = 3;
    std::size_t hidden = 128;
    std::size_t head_layers = 1;
    std::size_t cond_hidden_layers = 1;
    /// 0 selects the embedding width.
    std::size_t cond_hidden_width = 0;
    double dropout = 0.2;
    double leaky_slope = diff::kDefaultLeakySlope;

    std::size_t resolved_embedding_width() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// The full network for one variant. Parameters are initialized from
/// RngStream(seed).split(parameter path), so adding a module never
/// changes another module's initial weights.
class Model {
public:
    Model(Variant variant, const ModelConfig& config, std::uint64_t seed);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    Variant variant() const { return variant_; }
    const ModelConfig& config() const { return config_; }
    bool has_conditioning() const { return uses_embeddings(variant_); }

    /// Conditioning vector for `active`, or nothing for GRU / GRU-A.
    std::optional<diff::Var> conditioning(diff::Tape& tape, const cond::ActiveSet& active, bool training,
                                          diff::RngStream& rng);

    /// [B x K] class probabilities or [B x 1] normalized RUL.
    diff::Var forward(diff::Tape& tape, const data::MiniBatch& batch, bool training, diff::RngStream& rng);

    void for_each_parameter(const std::function<void(diff::Parameter&)>& fn);
    std::vector<diff::Parameter*> parameters();

    std::map<std::string, diff::Tensor> state() const;
    /// Requires exactly the same key set and shapes.
    void load_state(const std::map<std::string, diff::Tensor>& state);

    cond::EmbeddingTable& embeddings() { return embeddings_; }
    cond::ConditioningNet& conditioning_net() { return cond_net_; }
    dyn::GruStack& gru() { return gru_; }
    dyn::OutputHead& head() { return head_; }

private:
    Variant variant_;
    ModelConfig config_;
    cond::EmbeddingTable embeddings_;
    cond::ConditioningNet cond_net_;
    dyn::GruStack gru_;
    dyn::OutputHead head_;
};

/// Splits a [B x T x d] batch tensor into T constant [B x d] step nodes.
std::vector<diff::Var> step_inputs(diff::Tape& tape, const diff::Tensor& inputs);

} // namespace condrnn::train
