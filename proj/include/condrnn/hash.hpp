#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace condrnn {

/// Incremental 64-bit FNV-1a.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    void update(std::span<const std::uint8_t> bytes) {
        for (auto b : bytes) {
            state_ ^= b;
            state_ *= kPrime;
        }
    }
    void update(std::string_view s) {
        update(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }
    // Fixed-width little-endian encodings so digests agree across platforms.
    void update_u64(std::uint64_t v) {
        std::uint8_t buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
        update(std::span<const std::uint8_t>(buf, 8));
    }
    void update_f64(double v) { update_u64(std::bit_cast<std::uint64_t>(v)); }
    void update_str(std::string_view s) {
        update_u64(s.size());
        update(s);
    }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = kOffset;
};

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    Fnv1a64 h;
    h.update(bytes);
    return h.digest();
}

inline std::uint64_t fnv1a64(std::string_view s) {
    Fnv1a64 h;
    h.update(s);
    return h.digest();
}

} // namespace condrnn
