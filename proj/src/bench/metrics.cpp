#include "condrnn/bench/metrics.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "condrnn/error.hpp"

namespace condrnn::bench {

double error_rate(std::span<const std::size_t> predicted, std::span<const std::size_t> labels) {
    if (predicted.empty()) throw ContractError("error_rate of an empty prediction set");
    if (predicted.size() != labels.size()) throw ContractError("error_rate: prediction and label counts differ");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) wrong += predicted[i] != labels[i];
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

double rmse(std::span<const double> predicted, std::span<const double> targets) {
    if (predicted.empty()) throw ContractError("rmse of an empty prediction set");
    if (predicted.size() != targets.size()) throw ContractError("rmse: prediction and target counts differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - targets[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(predicted.size()));
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double welch_p_value(std::span<const double> a, std::span<const double> b) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (a.size() < 2 || b.size() < 2) return nan;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double va = std::pow(sample_std(a), 2) / na;
    const double vb = std::pow(sample_std(b), 2) / nb;
    if (va + vb == 0.0) return nan;
    const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
    const double dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    boost::math::students_t dist(dof);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

} // namespace condrnn::bench
