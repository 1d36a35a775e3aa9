#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <utility>
#include <vector>

#include "sketchguard/errors.hpp"

namespace sketchguard {

// How a d x w counter matrix is carved into partitions. Partition ids are
// 1-based everywhere, including on the wire.
enum class PartitionKind : std::uint8_t { Single = 0, Rows = 1, Cells = 2 };

struct PartitionScheme {
    PartitionKind kind = PartitionKind::Single;
    unsigned p = 1;

    friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;
};

// Contiguous split of n elements into p chunks; earlier chunks absorb the
// remainder, so sizes differ by at most one.
inline std::pair<unsigned, unsigned> chunk_range(unsigned n, unsigned p, unsigned chunk) {
    const unsigned base = n / p;
    const unsigned rem = n % p;
    const unsigned begin = chunk * base + std::min(chunk, rem);
    return {begin, begin + base + (chunk < rem ? 1u : 0u)};
}

inline unsigned chunk_of(unsigned n, unsigned p, unsigned idx) {
    const unsigned base = n / p;
    const unsigned rem = n % p;
    const unsigned wide = rem * (base + 1);
    return idx < wide ? idx / (base + 1) : rem + (idx - wide) / base;
}

inline void validate_scheme(const PartitionScheme& s, unsigned d, unsigned w) {
    if (d == 0 || w == 0) throw param_error("partition: geometry must be non-empty");
    if (s.p == 0) throw param_error("partition: p must be >= 1");
    switch (s.kind) {
        case PartitionKind::Single:
            if (s.p != 1) throw param_error("partition: Single means exactly one partition");
            break;
        case PartitionKind::Rows:
            if (s.p > d) throw param_error("partition: more row partitions than rows");
            break;
        case PartitionKind::Cells:
            if (s.p > d * w) throw param_error("partition: more cell partitions than cells");
            break;
    }
}

inline unsigned partition_of(unsigned row, unsigned col, const PartitionScheme& s,
                             unsigned d, unsigned w) {
    if (row >= d || col >= w) throw param_error("partition: cell out of range");
    switch (s.kind) {
        case PartitionKind::Single: return 1;
        case PartitionKind::Rows: return chunk_of(d, s.p, row) + 1;
        case PartitionKind::Cells: return chunk_of(d * w, s.p, row * w + col) + 1;
    }
    throw param_error("partition: unknown kind");
}

inline bool member(unsigned row, unsigned col, unsigned partition, const PartitionScheme& s,
                   unsigned d, unsigned w) {
    return partition_of(row, col, s, d, w) == partition;
}

// Columns of `row` that fall into the 1-based `partition`, as [first, last);
// empty when the row does not meet it. Every scheme keeps a partition's cells
// contiguous within a row, so one span per row is enough for encode/decode.
inline std::pair<unsigned, unsigned> col_span(const PartitionScheme& s, unsigned d, unsigned w,
                                              unsigned partition, unsigned row) {
    if (row >= d) throw param_error("partition: row out of range");
    if (partition == 0 || partition > s.p) throw param_error("partition: id out of range");
    switch (s.kind) {
        case PartitionKind::Single: return {0, w};
        case PartitionKind::Rows: {
            const auto [rb, re] = chunk_range(d, s.p, partition - 1);
            if (row >= rb && row < re) return {0, w};
            return {0, 0};
        }
        case PartitionKind::Cells: {
            const auto [fb, fe] = chunk_range(d * w, s.p, partition - 1);
            const unsigned lo = std::max(fb, row * w);
            const unsigned hi = std::min(fe, row * w + w);
            if (lo < hi) return {lo - row * w, hi - row * w};
            return {0, 0};
        }
    }
    throw param_error("partition: unknown kind");
}

// All rows a partition meets, each with its column span, ascending by row.
// This is the row order of every multi-row share payload.
inline std::vector<std::tuple<unsigned, unsigned, unsigned>> partition_row_spans(
    const PartitionScheme& s, unsigned d, unsigned w, unsigned partition) {
    std::vector<std::tuple<unsigned, unsigned, unsigned>> spans;
    for (unsigned row = 0; row < d; ++row) {
        const auto [lo, hi] = col_span(s, d, w, partition, row);
        if (lo < hi) spans.emplace_back(row, lo, hi);
    }
    return spans;
}

}  // namespace sketchguard
