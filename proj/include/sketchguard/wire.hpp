#pragma once

#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "sketchguard/batch.hpp"
#include "sketchguard/coverage.hpp"
#include "sketchguard/partition.hpp"
#include "sketchguard/sketch.hpp"

namespace sketchguard {

// Share layout. Header, 15 bytes, all big-endian:
//   version u8 (= 1) | cycle u32 | sender u16 | policy u8 | representation u8
//   | partition u16 | count u32
// Payload fields are packed at byte granularity: each configured bit width is
// rounded up to whole bytes. Column indices are 1-based on the wire.
// `count` holds the number of entries (item shares), the fixed row width
// (dense row shares), or the total element count (variable-length shares,
// whose payload carries one u32 element count per covered row).
inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kShareHeaderBytes = 15;

enum class PolicyTag : std::uint8_t { Full = 1, Incremental = 2, Alive = 3 };

struct ShareHeader {
    std::uint8_t version = kWireVersion;
    std::uint32_t cycle = 0;
    std::uint16_t sender = 0;
    PolicyTag policy = PolicyTag::Incremental;
    std::uint8_t rep = 0;        // RepKind value; 0 for alive and full shares
    std::uint16_t partition = 0; // 1-based; 0 for item shares and alive
    std::uint32_t count = 0;

    bool operator==(const ShareHeader&) const = default;
};

struct Share {
    ShareHeader header;
    unsigned destination = 0;  // routing metadata, never serialized
    std::vector<std::uint8_t> payload;

    std::uint64_t payload_bits() const { return payload.size() * 8; }
};

std::vector<std::uint8_t> pack_share(const Share& share);
Share unpack_share(std::span<const std::uint8_t> bytes, unsigned destination = 0);

// Run-wide context the codec works against. The scheme's partition count
// must match the mapping's, and cfg must already be validated (all derived
// widths filled in).
struct WireContext {
    const CoverageMapping* mapping = nullptr;
    PartitionScheme scheme;
    unsigned d = 0;
    unsigned w = 0;
    BatchConfig cfg;
};

void validate_context(const WireContext& ctx);

// Instrumentation filled by the codec. Senders test membership while routing
// counter elements: one test per structure row per flush under Rows, one per
// routed element under Cells (d*B' for CntBuff, modified counters for
// CntHash/CntDiff, every cell for a full share), none under Single.
// Receivers of item shares recompute one hash per (entry, held block, row the
// block's partition meets) and under Cells also test each recomputed cell.
struct WireStats {
    std::uint64_t shares = 0;
    std::uint64_t payload_bits = 0;
    std::uint64_t header_bits = 0;
    std::uint64_t membership_tests = 0;
    std::uint64_t hash_ops = 0;

    WireStats& operator+=(const WireStats& o) {
        shares += o.shares;
        payload_bits += o.payload_bits;
        header_bits += o.header_bits;
        membership_tests += o.membership_tests;
        hash_ops += o.hash_ops;
        return *this;
    }
    bool operator==(const WireStats&) const = default;
};

// One share per destination for the item kinds (identical payload, partition
// id 0), one per (destination, covered partition) for the counter kinds.
// Empty batches are not encodable; send encode_alive instead.
std::vector<Share> encode_batch(const Batch& batch, const WireContext& ctx, std::uint32_t cycle,
                                unsigned sender, WireStats* stats = nullptr);

std::vector<Share> encode_alive(const WireContext& ctx, std::uint32_t cycle, unsigned sender,
                                WireStats* stats = nullptr);

// The whole data sketch, one share per (destination, covered partition),
// counters bits_N wide.
std::vector<Share> full_share_encode(const Sketch& data, const WireContext& ctx,
                                     std::uint32_t cycle, unsigned sender,
                                     WireStats* stats = nullptr);

// Applies one share to the receiver's sum sketch, scaled by the mapping
// coefficient of (receiver's block, sender). Item shares recompute the hash
// columns this receiver's partitions require; counter shares add the carried
// deltas; full shares add coeff * counter (rebuilding a sum from zero).
// Alive shares are a no-op.
void decode_apply(const Share& share, unsigned receiver, Sketch& sum, const WireContext& ctx,
                  WireStats* stats = nullptr);

// Raw cells of one full share, for keeping per-sender copies.
std::vector<std::tuple<unsigned, unsigned, std::uint64_t>> decode_full_cells(
    const Share& share, const WireContext& ctx);

}  // namespace sketchguard
