#include "condrnn/train/optim.hpp"

#include <cmath>

#include "condrnn/error.hpp"

namespace condrnn::train {

void sgd_step(diff::Parameter& param, double lr) {
    if (param.grad.shape() != param.value.shape()) throw DimensionError("sgd_step: gradient shape mismatch");
    auto v = param.value.data();
    auto g = param.grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (g[i] != 0.0) v[i] -= lr * g[i];
    }
}

void adam_step(std::span<diff::Parameter* const> params, AdamState& state, const AdamConfig& cfg) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (diff::Parameter* p : params) {
        if (p->grad.shape() != p->value.shape()) throw DimensionError("adam_step: gradient shape mismatch");
        auto [it, inserted] = state.moments.try_emplace(p->name);
        auto& mo = it->second;
        if (inserted) {
            mo.m = diff::Tensor(p->value.shape());
            mo.v = diff::Tensor(p->value.shape());
        } else if (mo.m.shape() != p->value.shape()) {
            throw DimensionError("adam_step: moment buffers of '" + p->name + "' do not match");
        }
        auto v = p->value.data();
        auto g = p->grad.data();
        auto m1 = mo.m.data();
        auto m2 = mo.v.data();
        for (std::size_t i = 0; i < v.size(); ++i) {
            m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g[i];
            m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            v[i] -= cfg.lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.eps);
        }
    }
}

} // namespace condrnn::train
