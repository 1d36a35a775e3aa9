#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sketchguard/common.hpp"

namespace sketchguard {

// An identifier stream plus the declared identifier width. The file form is
// newline-delimited: a `#mid=<bits>` header, then one entry per line, either a
// bare identifier (0x-prefixed hex or decimal) or a pre-aggregated `count,id`
// pair that expands to `count` copies. Lines starting with `#` are comments.
struct Trace {
    std::uint16_t bits_mid = 64;
    std::vector<FlowId> items;

    bool operator==(const Trace&) const = default;
};

// Parse a single identifier token against the declared width. Hex accepts up
// to 64 digits (256 bits); decimal accepts anything that fits in 64 bits.
FlowId parse_flow_id(const std::string& token, std::uint16_t bits);

Trace parse_trace(std::istream& in);
Trace load_trace(const std::string& path);

void write_trace(std::ostream& out, const Trace& trace);
void save_trace(const std::string& path, const Trace& trace);

// Seeded Zipf stream over `flows` identifiers drawn from the `bits_mid` id
// space. Exponent s = 0 degenerates to a uniform stream. Sampling is pinned
// to mt19937_64 with 53-bit uniforms and an explicit CDF, so a (flows, items,
// s, seed, bits) tuple names one exact byte sequence on every platform.
Trace zipf_trace(std::uint64_t flows, std::uint64_t items, double s, std::uint64_t seed,
                 std::uint16_t bits_mid = 64);

}  // namespace sketchguard
