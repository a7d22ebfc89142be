#include "condrnn/cond/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "condrnn/error.hpp"
#include "condrnn/hash.hpp"

namespace condrnn::cond {

SensorCatalog::SensorCatalog(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw ContractError("sensor catalog must contain at least one sensor");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) throw ContractError("duplicate sensor identifier '" + n + "'");
    }
}

SensorCatalog SensorCatalog::numbered(std::size_t d) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < d; ++i) names.push_back("s" + std::to_string(i));
    return SensorCatalog(std::move(names));
}

std::size_t SensorCatalog::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ContractError("unknown sensor '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

std::uint64_t SensorCatalog::digest() const {
    Fnv1a64 h;
    h.update_u64(names_.size());
    for (const auto& n : names_) h.update_str(n);
    return h.digest();
}

ActiveSet::ActiveSet(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b = b ? 1 : 0;
    if (count() == 0) throw EmptySetError("active sensor set must contain at least one sensor");
}

ActiveSet ActiveSet::all(std::size_t d) { return ActiveSet(std::vector<std::uint8_t>(d, 1)); }

ActiveSet ActiveSet::from_indices(std::size_t d, std::span<const std::size_t> indices) {
    std::vector<std::uint8_t> bits(d, 0);
    for (auto i : indices) {
        if (i >= d) throw ContractError("sensor index out of range");
        bits[i] = 1;
    }
    return ActiveSet(std::move(bits));
}

ActiveSet ActiveSet::parse(const std::string& text) {
    std::vector<std::uint8_t> bits;
    for (char c : text) {
        if (c != '0' && c != '1') throw ContractError("active set string must be 0/1 characters");
        bits.push_back(c == '1');
    }
    return ActiveSet(std::move(bits));
}

std::size_t ActiveSet::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> ActiveSet::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> ActiveSet::inactive_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (!bits_[i]) out.push_back(i);
    return out;
}

std::size_t ActiveSet::overlap(const ActiveSet& other) const {
    if (other.universe() != universe()) throw ContractError("active sets over different catalogs");
    std::size_t n = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) n += bits_[i] & other.bits_[i];
    return n;
}

std::size_t ActiveSet::union_size(const ActiveSet& other) const {
    if (other.universe() != universe()) throw ContractError("active sets over different catalogs");
    std::size_t n = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) n += bits_[i] | other.bits_[i];
    return n;
}

bool ActiveSet::is_subset_of(const ActiveSet& other) const { return overlap(other) == count(); }

ActiveSet ActiveSet::intersect(const ActiveSet& other) const {
    if (other.universe() != universe()) throw ContractError("active sets over different catalogs");
    std::vector<std::uint8_t> bits(bits_.size());
    for (std::size_t i = 0; i < bits_.size(); ++i) bits[i] = bits_[i] & other.bits_[i];
    return ActiveSet(std::move(bits));
}

std::string ActiveSet::to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
}

std::size_t masked_count(double fraction, std::size_t d) {
    // nearbyint honours the default round-to-nearest-even mode.
    return static_cast<std::size_t>(std::nearbyint(fraction * static_cast<double>(d)));
}

} // namespace condrnn::cond
