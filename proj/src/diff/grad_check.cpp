#include "condrnn/diff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace condrnn::diff {
namespace {

double evaluate(const LossBuilder& f) {
    Tape tape;
    return f(tape).value().item();
}

} // namespace

GradCheckResult grad_check(const LossBuilder& f, std::span<Parameter* const> params, double step) {
    for (Parameter* p : params) p->grad = Tensor(p->value.shape());
    {
        Tape tape;
        Var loss = f(tape);
        tape.backward(loss);
    }

    GradCheckResult result;
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + step;
            const double up = evaluate(f);
            p->value[i] = saved - step;
            const double down = evaluate(f);
            p->value[i] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double err = std::abs(p->grad[i] - numeric) / std::max(1.0, std::abs(numeric));
            ++result.coordinates;
            if (err > result.max_rel_error || result.worst_param.empty()) {
                result.max_rel_error = std::max(result.max_rel_error, err);
                result.worst_param = p->name;
                result.worst_index = i;
            }
        }
    }
    return result;
}

} // namespace condrnn::diff
