#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace condrnn::cond {

/// Canonical ordered list of sensor identifiers; index i is sensor i
/// everywhere (embedding rows, data columns, mask bits).
class SensorCatalog {
public:
    SensorCatalog() = default;
    explicit SensorCatalog(std::vector<std::string> names);

    /// Catalog with names s0, s1, ...
    static SensorCatalog numbered(std::size_t d);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    /// Throws ContractError for unknown names.
    std::size_t index_of(const std::string& name) const;
    std::uint64_t digest() const;

    friend bool operator==(const SensorCatalog&, const SensorCatalog&) = default;

private:
    std::vector<std::string> names_;
};

/// Subset of the catalog, one bit per sensor in catalog order.
class ActiveSet {
public:
    ActiveSet() = default;
    /// Requires at least one set bit.
    explicit ActiveSet(std::vector<std::uint8_t> bits);

    static ActiveSet all(std::size_t d);
    static ActiveSet from_indices(std::size_t d, std::span<const std::size_t> indices);
    /// Parses a string of '0'/'1' characters.
    static ActiveSet parse(const std::string& bits);

    std::size_t universe() const { return bits_.size(); }
    std::size_t count() const;
    bool contains(std::size_t i) const { return bits_.at(i) != 0; }
    std::vector<std::size_t> indices() const;
    std::vector<std::size_t> inactive_indices() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    std::size_t overlap(const ActiveSet& other) const;
    std::size_t union_size(const ActiveSet& other) const;
    bool is_subset_of(const ActiveSet& other) const;
    /// Intersection; throws EmptySetError when empty.
    ActiveSet intersect(const ActiveSet& other) const;

    std::string to_string() const;

    friend bool operator==(const ActiveSet&, const ActiveSet&) = default;
    friend auto operator<=>(const ActiveSet&, const ActiveSet&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// round-half-to-even of fraction * d.
std::size_t masked_count(double fraction, std::size_t d);

} // namespace condrnn::cond
