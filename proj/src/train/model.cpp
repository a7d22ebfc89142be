#include "condrnn/train/model.hpp"

#include <algorithm>
#include <cctype>

#include "condrnn/error.hpp"

namespace condrnn::train {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Gru: return "gru";
        case Variant::GruSe: return "gru-se";
        case Variant::GruCm: return "gru-cm";
        case Variant::GruA: return "gru-a";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    std::string k = s;
    std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::replace(k.begin(), k.end(), '_', '-');
    if (k == "gru") return Variant::Gru;
    if (k == "gru-se") return Variant::GruSe;
    if (k == "gru-cm") return Variant::GruCm;
    if (k == "gru-a") return Variant::GruA;
    throw ConfigError("unknown model variant '" + s + "' (expected gru, gru-se, gru-cm, gru-a)");
}

bool uses_embeddings(Variant v) { return v == Variant::GruSe || v == Variant::GruCm; }
bool uses_masking(Variant v) { return v != Variant::GruA; }

std::size_t ModelConfig::resolved_embedding_width() const {
    const std::size_t w = embedding_width ? embedding_width : sensors / 2;
    return std::max<std::size_t>(w, 1);
}

Model::Model(Variant variant, const ModelConfig& config, std::uint64_t seed) : variant_(variant), config_(config) {
    if (config.sensors == 0) throw ConfigError("model needs at least one sensor");
    diff::RngStream root(seed);
    const std::size_t ds = config.resolved_embedding_width();
    std::size_t input = config.sensors;
    if (has_conditioning()) {
        embeddings_ = cond::EmbeddingTable(config.sensors, ds, root);
        input += ds;
    }
    if (variant == Variant::GruCm) {
        cond::ConditioningConfig cc;
        cc.embedding_width = ds;
        cc.hidden_layers = config.cond_hidden_layers;
        cc.hidden_width = config.cond_hidden_width;
        cc.dropout = config.dropout;
        cc.leaky_slope = config.leaky_slope;
        cond_net_ = cond::ConditioningNet(ds, cc, root);
    }
    gru_ = dyn::GruStack(input, config.hidden, config.gru_layers, root);
    head_ = dyn::OutputHead(config.hidden, config.task, config.classes, config.head_layers, config.dropout, root);
}

std::optional<diff::Var> Model::conditioning(diff::Tape& tape, const cond::ActiveSet& active, bool training,
                                             diff::RngStream& rng) {
    switch (variant_) {
        case Variant::GruCm: return cond::conditioning_vector(tape, active, embeddings_, cond_net_, training, rng);
        case Variant::GruSe: return cond::conditioning_vector_se(tape, active, embeddings_);
        default: return std::nullopt;
    }
}

std::vector<diff::Var> step_inputs(diff::Tape& tape, const diff::Tensor& inputs) {
    if (inputs.rank() != 3) throw DimensionError("batch inputs must be [B x T x d]");
    const std::size_t b = inputs.shape()[0], t_len = inputs.shape()[1], d = inputs.shape()[2];
    std::vector<diff::Var> steps;
    steps.reserve(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
        diff::Tensor x(diff::Shape{b, d});
        for (std::size_t i = 0; i < b; ++i)
            std::copy_n(inputs.data().begin() + static_cast<std::ptrdiff_t>((i * t_len + t) * d), d,
                        x.data().begin() + static_cast<std::ptrdiff_t>(i * d));
        steps.push_back(tape.constant(std::move(x)));
    }
    return steps;
}

diff::Var Model::forward(diff::Tape& tape, const data::MiniBatch& batch, bool training, diff::RngStream& rng) {
    if (batch.inputs.rank() != 3 || batch.inputs.shape()[2] != config_.sensors) {
        throw DimensionError("model expects [B x T x " + std::to_string(config_.sensors) + "] inputs, got " +
                             diff::shape_string(batch.inputs.shape()));
    }
    auto cond = conditioning(tape, batch.active, training, rng);
    auto steps = step_inputs(tape, batch.inputs);
    return dyn::forward_batch(tape, steps, cond, gru_, head_, training, rng);
}

void Model::for_each_parameter(const std::function<void(diff::Parameter&)>& fn) {
    if (has_conditioning()) fn(embeddings_.vectors);
    if (variant_ == Variant::GruCm) cond_net_.for_each_parameter(fn);
    gru_.for_each_parameter(fn);
    head_.for_each_parameter(fn);
}

std::vector<diff::Parameter*> Model::parameters() {
    std::vector<diff::Parameter*> out;
    for_each_parameter([&](diff::Parameter& p) { out.push_back(&p); });
    return out;
}

std::map<std::string, diff::Tensor> Model::state() const {
    std::map<std::string, diff::Tensor> out;
    const_cast<Model*>(this)->for_each_parameter([&](diff::Parameter& p) { out.emplace(p.name, p.value); });
    return out;
}

void Model::load_state(const std::map<std::string, diff::Tensor>& state) {
    std::size_t matched = 0;
    for_each_parameter([&](diff::Parameter& p) {
        auto it = state.find(p.name);
        if (it == state.end()) throw CheckpointError("checkpoint lacks parameter '" + p.name + "'");
        if (it->second.shape() != p.value.shape()) {
            throw CheckpointError("parameter '" + p.name + "' has shape " + diff::shape_string(it->second.shape()) +
                                  ", model expects " + diff::shape_string(p.value.shape()));
        }
        p.value = it->second;
        p.grad = diff::Tensor(p.value.shape());
        ++matched;
    });
    if (matched != state.size()) throw CheckpointError("checkpoint holds parameters this model does not have");
}

} // namespace condrnn::train
