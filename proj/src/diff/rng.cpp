#include "condrnn/diff/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "condrnn/error.hpp"
#include "condrnn/hash.hpp"

namespace condrnn::diff {

double RngStream::normal() {
    // 1 - u lies in (0, 1], keeping the log finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngStream::below(std::size_t n) {
    if (n == 0) throw ContractError("RngStream::below: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

RngStream RngStream::split(std::string_view label) const {
    return RngStream(FromKey{}, mix(key_ ^ fnv1a64(label)));
}

RngStream RngStream::split(std::uint64_t index) const {
    return RngStream(FromKey{}, mix(key_ ^ mix(index + kGolden)));
}

} // namespace condrnn::diff
