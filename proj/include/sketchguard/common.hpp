#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>

namespace sketchguard {

// Flow identifier: an opaque big-endian value of a fixed bit width, shared by
// every item of a run. Stored right-aligned in 32 bytes so that widths from 32
// up to 256 bits need no dynamic allocation and lexicographic comparison of
// the byte array equals numeric comparison.
struct FlowId {
    std::array<std::uint8_t, 32> bytes{};
    std::uint16_t bits = 64;

    static FlowId from_u64(std::uint64_t v, std::uint16_t width_bits = 64) {
        FlowId id;
        id.bits = width_bits;
        for (int i = 0; i < 8; ++i)
            id.bytes[31 - i] = static_cast<std::uint8_t>(v >> (8 * i));
        return id;
    }

    std::uint64_t low64() const {
        std::uint64_t v = 0;
        for (int i = 24; i < 32; ++i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
        return v;
    }

    std::size_t wire_bytes() const { return (static_cast<std::size_t>(bits) + 7) / 8; }

    bool operator==(const FlowId&) const = default;
    auto operator<=>(const FlowId&) const = default;

    std::string to_hex() const;
};

// 64-bit FNV-1a, used for report digests and container hashing. Not a part of
// the sketch hash family.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

struct FlowIdHash {
    std::size_t operator()(const FlowId& id) const {
        return static_cast<std::size_t>(fnv1a64(id.bytes.data(), id.bytes.size()));
    }
};

}  // namespace sketchguard
