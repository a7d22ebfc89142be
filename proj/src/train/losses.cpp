#include "condrnn/train/losses.hpp"

#include <algorithm>
#include <cmath>

#include "condrnn/error.hpp"

namespace condrnn::train {

using diff::Tensor;
using diff::Var;

Var cross_entropy(Var probs, const Tensor& y) {
    const Tensor& p = probs.value();
    if (p.shape() != y.shape() || p.rank() != 2) {
        throw DimensionError("cross_entropy: predictions " + diff::shape_string(p.shape()) + " vs targets " +
                             diff::shape_string(y.shape()));
    }
    const std::size_t b = p.shape()[0];
    if (b == 0) throw EmptySetError("cross_entropy over an empty batch");
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (y[i] != 0.0) loss -= y[i] * std::log(std::max(p[i], kLogFloor));
    }
    loss /= static_cast<double>(b);
    return probs.tape->record(Tensor::scalar(loss), {probs},
                              [p, y, b](const Tensor& g, std::span<Tensor* const> in) {
                                  const double scale = g[0] / static_cast<double>(b);
                                  for (std::size_t i = 0; i < p.size(); ++i) {
                                      if (y[i] != 0.0 && p[i] > kLogFloor) (*in[0])[i] -= scale * y[i] / p[i];
                                  }
                              });
}

Var squared_error(Var pred, std::span<const double> target) {
    const Tensor& p = pred.value();
    if (p.size() != target.size()) {
        throw DimensionError("squared_error: " + std::to_string(p.size()) + " predictions vs " +
                             std::to_string(target.size()) + " targets");
    }
    if (p.size() == 0) throw EmptySetError("squared_error over an empty batch");
    std::vector<double> y(target.begin(), target.end());
    const double n = static_cast<double>(p.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) loss += (p[i] - y[i]) * (p[i] - y[i]);
    loss /= n;
    return pred.tape->record(Tensor::scalar(loss), {pred}, [p, y, n](const Tensor& g, std::span<Tensor* const> in) {
        for (std::size_t i = 0; i < p.size(); ++i) (*in[0])[i] += g[0] * 2.0 * (p[i] - y[i]) / n;
    });
}

Tensor one_hot(std::span<const std::size_t> labels, std::size_t classes) {
    Tensor t(diff::Shape{labels.size(), classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) throw DimensionError("one_hot: label out of range");
        t.at(i, labels[i]) = 1.0;
    }
    return t;
}

} // namespace condrnn::train
