#include "sketchguard/wire.hpp"

#include <algorithm>
#include <map>

namespace sketchguard {

namespace {

unsigned field_bytes(unsigned bits) { return (bits + 7) / 8; }

void put_uint(std::vector<std::uint8_t>& out, std::uint64_t v, unsigned nbytes) {
    if (nbytes < 8 && (v >> (8 * nbytes)) != 0)
        throw wire_error("value does not fit its configured wire width");
    for (unsigned i = nbytes; i-- > 0;) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_uint(std::span<const std::uint8_t> p, std::size_t& pos, unsigned nbytes) {
    if (pos + nbytes > p.size()) throw wire_error("share payload truncated");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < nbytes; ++i) v = (v << 8) | p[pos++];
    return v;
}

void put_id(std::vector<std::uint8_t>& out, const FlowId& id, unsigned bits_mid) {
    if (id.bits != bits_mid)
        throw wire_error("identifier width differs from the configured bits_mid");
    const unsigned n = field_bytes(bits_mid);
    for (unsigned i = 32 - n; i < 32; ++i) out.push_back(id.bytes[i]);
}

FlowId get_id(std::span<const std::uint8_t> p, std::size_t& pos, unsigned bits_mid) {
    const unsigned n = field_bytes(bits_mid);
    if (pos + n > p.size()) throw wire_error("share payload truncated");
    FlowId id;
    id.bits = static_cast<std::uint16_t>(bits_mid);
    for (unsigned i = 0; i < n; ++i) id.bytes[32 - n + i] = p[pos++];
    return id;
}

// Distinct holders other than the sender that cover (sender, q), in the
// mapping's block order.
std::vector<unsigned> partition_dests(const CoverageMapping& m, unsigned sender, unsigned q) {
    std::vector<unsigned> out;
    for (const auto* b : m.covers(sender, q))
        if (b->holder != sender && std::find(out.begin(), out.end(), b->holder) == out.end())
            out.push_back(b->holder);
    return out;
}

ShareHeader make_header(std::uint32_t cycle, unsigned sender, PolicyTag policy, std::uint8_t rep,
                        unsigned partition, std::uint64_t count) {
    ShareHeader h;
    h.cycle = cycle;
    h.sender = static_cast<std::uint16_t>(sender);
    h.policy = policy;
    h.rep = rep;
    h.partition = static_cast<std::uint16_t>(partition);
    h.count = static_cast<std::uint32_t>(count);
    return h;
}

void note_share(WireStats* stats, const Share& s) {
    if (!stats) return;
    ++stats->shares;
    stats->payload_bits += s.payload_bits();
    stats->header_bits += kShareHeaderBytes * 8;
}

// (0-based column, delta) elements bucketed per partition and row. Fragments
// keep insertion order; callers feed them in the order the wire wants.
using RowBuckets = std::vector<std::map<unsigned, std::vector<std::pair<unsigned, std::uint64_t>>>>;

std::vector<Share> emit_var(const RowBuckets& buckets, const WireContext& ctx,
                            std::uint32_t cycle, unsigned sender, PolicyTag policy,
                            std::uint8_t rep, unsigned value_bytes, WireStats* stats) {
    std::vector<Share> shares;
    for (unsigned q = 1; q <= ctx.scheme.p; ++q) {
        const auto spans = partition_row_spans(ctx.scheme, ctx.d, ctx.w, q);
        std::vector<std::uint8_t> payload;
        std::uint64_t count = 0;
        for (const auto& [row, lo, hi] : spans) {
            const auto& bucket = buckets[q - 1];
            const auto it = bucket.find(row);
            const std::size_t n = it == bucket.end() ? 0 : it->second.size();
            put_uint(payload, n, 4);
            if (it != bucket.end())
                for (const auto& [col, delta] : it->second) {
                    put_uint(payload, col + 1, field_bytes(ctx.cfg.bits_w));
                    if (value_bytes) put_uint(payload, delta, value_bytes);
                }
            count += n;
        }
        for (unsigned dest : partition_dests(*ctx.mapping, sender, q)) {
            Share s{make_header(cycle, sender, policy, rep, q, count), dest, payload};
            note_share(stats, s);
            shares.push_back(std::move(s));
        }
    }
    return shares;
}

// Routes one element to its partition bucket, counting the membership test
// under Cells; under Single/Rows the row's partition is resolved per row by
// the callers, which count one test per row per flush.
void route_element(RowBuckets& buckets, const WireContext& ctx, unsigned row, unsigned col,
                   std::uint64_t delta, WireStats* stats) {
    const unsigned q = partition_of(row, col, ctx.scheme, ctx.d, ctx.w);
    if (ctx.scheme.kind == PartitionKind::Cells && stats) ++stats->membership_tests;
    buckets[q - 1][row].emplace_back(col, delta);
}

std::vector<Share> encode_items(const Batch& batch, const WireContext& ctx, std::uint32_t cycle,
                                unsigned sender, WireStats* stats) {
    std::vector<std::uint8_t> payload;
    std::uint64_t count = 0;
    if (batch.kind() == RepKind::ItemBuff) {
        const auto& items = std::get<ItemBuffRep>(batch.rep).items;
        for (const auto& id : items) put_id(payload, id, ctx.cfg.bits_mid);
        count = items.size();
    } else {
        const auto& freq = std::get<FlwHashRep>(batch.rep).freq;
        for (const auto& [id, c] : freq) {
            put_id(payload, id, ctx.cfg.bits_mid);
            put_uint(payload, c, field_bytes(ctx.cfg.bits_B));
        }
        count = freq.size();
    }
    std::vector<Share> shares;
    for (unsigned dest : ctx.mapping->covering_nodes(sender)) {
        Share s{make_header(cycle, sender, PolicyTag::Incremental,
                            static_cast<std::uint8_t>(batch.kind()), 0, count),
                dest, payload};
        note_share(stats, s);
        shares.push_back(std::move(s));
    }
    return shares;
}

std::vector<Share> encode_cnt_buff_fixed(const Batch& batch, const WireContext& ctx,
                                         std::uint32_t cycle, unsigned sender,
                                         WireStats* stats) {
    const auto& idx = std::get<CntBuffRep>(batch.rep).idx;
    if (ctx.scheme.kind == PartitionKind::Rows && stats) stats->membership_tests += ctx.d;
    std::vector<Share> shares;
    for (unsigned q = 1; q <= ctx.scheme.p; ++q) {
        std::vector<std::uint8_t> payload;
        for (const auto& [row, lo, hi] : partition_row_spans(ctx.scheme, ctx.d, ctx.w, q))
            for (std::uint32_t j = 0; j < batch.b_prime; ++j)
                put_uint(payload, idx(row, j) + 1, field_bytes(ctx.cfg.bits_w));
        for (unsigned dest : partition_dests(*ctx.mapping, sender, q)) {
            Share s{make_header(cycle, sender, PolicyTag::Incremental,
                                static_cast<std::uint8_t>(RepKind::CntBuff), q, batch.b_prime),
                    dest, payload};
            note_share(stats, s);
            shares.push_back(std::move(s));
        }
    }
    return shares;
}

std::vector<Share> encode_counters_var(const Batch& batch, const WireContext& ctx,
                                       std::uint32_t cycle, unsigned sender, WireStats* stats) {
    RowBuckets buckets(ctx.scheme.p);
    unsigned value_bytes = field_bytes(ctx.cfg.bits_B);
    if (ctx.scheme.kind == PartitionKind::Rows && stats) stats->membership_tests += ctx.d;
    switch (batch.kind()) {
        case RepKind::CntBuff: {
            const auto& idx = std::get<CntBuffRep>(batch.rep).idx;
            for (unsigned i = 0; i < ctx.d; ++i)
                for (std::uint32_t j = 0; j < batch.b_prime; ++j)
                    route_element(buckets, ctx, i, idx(i, j), 1, stats);
            value_bytes = 0;  // occurrences, not deltas
            break;
        }
        case RepKind::CntHash: {
            const auto& tables = std::get<CntHashRep>(batch.rep).tables;
            for (unsigned i = 0; i < ctx.d; ++i)
                for (const auto& [col, delta] : tables[i])
                    route_element(buckets, ctx, i, col, delta, stats);
            break;
        }
        case RepKind::CntDiff: {
            const auto& diff = std::get<CntDiffRep>(batch.rep).diff;
            for (unsigned i = 0; i < ctx.d; ++i)
                for (unsigned j = 0; j < ctx.w; ++j)
                    if (diff(i, j) != 0) route_element(buckets, ctx, i, j, diff(i, j), stats);
            break;
        }
        default:
            throw param_error("variable-length encoding is for the counter kinds");
    }
    return emit_var(buckets, ctx, cycle, sender, PolicyTag::Incremental,
                    static_cast<std::uint8_t>(batch.kind()), value_bytes, stats);
}

// The per-partition coefficient a receiver applies to this sender's deltas.
std::int64_t block_coefficient(const CoverageMapping& m, unsigned receiver, unsigned partition,
                               unsigned sender) {
    for (const auto* blk : m.covers(sender, partition))
        if (blk->holder == receiver) {
            for (const auto& [node, coeff] : blk->terms)
                if (node == sender) return coeff;
        }
    throw wire_error("share does not match the coverage mapping");
}

struct VarRow {
    unsigned row, lo, hi;
    std::vector<std::pair<unsigned, std::uint64_t>> elems;  // 0-based col, value
};

// Parses a variable-length payload against the partition's row spans.
std::vector<VarRow> parse_var(const Share& share, const WireContext& ctx, unsigned value_bytes) {
    const auto spans = partition_row_spans(ctx.scheme, ctx.d, ctx.w, share.header.partition);
    std::span<const std::uint8_t> p(share.payload);
    std::size_t pos = 0;
    std::uint64_t total = 0;
    std::vector<VarRow> rows;
    for (const auto& [row, lo, hi] : spans) {
        VarRow vr{row, lo, hi, {}};
        const std::uint64_t n = get_uint(p, pos, 4);
        for (std::uint64_t e = 0; e < n; ++e) {
            const std::uint64_t onewire = get_uint(p, pos, field_bytes(ctx.cfg.bits_w));
            if (onewire == 0 || onewire > ctx.w) throw wire_error("column index out of range");
            const auto col = static_cast<unsigned>(onewire - 1);
            if (col < lo || col >= hi) throw wire_error("column outside its partition");
            const std::uint64_t v = value_bytes ? get_uint(p, pos, value_bytes) : 1;
            vr.elems.emplace_back(col, v);
        }
        total += n;
        rows.push_back(std::move(vr));
    }
    if (pos != p.size()) throw wire_error("trailing bytes in share payload");
    if (total != share.header.count) throw wire_error("element count disagrees with the header");
    return rows;
}

// Parses a dense index payload: header count indices per covered row.
std::vector<VarRow> parse_fixed_indices(const Share& share, const WireContext& ctx) {
    const auto spans = partition_row_spans(ctx.scheme, ctx.d, ctx.w, share.header.partition);
    std::span<const std::uint8_t> p(share.payload);
    std::size_t pos = 0;
    std::vector<VarRow> rows;
    for (const auto& [row, lo, hi] : spans) {
        VarRow vr{row, lo, hi, {}};
        for (std::uint32_t e = 0; e < share.header.count; ++e) {
            const std::uint64_t onewire = get_uint(p, pos, field_bytes(ctx.cfg.bits_w));
            if (onewire == 0 || onewire > ctx.w) throw wire_error("column index out of range");
            vr.elems.emplace_back(static_cast<unsigned>(onewire - 1), 1);
        }
        rows.push_back(std::move(vr));
    }
    if (pos != p.size()) throw wire_error("trailing bytes in share payload");
    return rows;
}

// Parses a full share: raw counters are positional within each row span, so
// the payload carries values only (span-length prefixes under Cells).
std::vector<VarRow> parse_full(const Share& share, const WireContext& ctx) {
    const auto spans = partition_row_spans(ctx.scheme, ctx.d, ctx.w, share.header.partition);
    const unsigned value_bytes = field_bytes(ctx.cfg.bits_N);
    const bool var = ctx.scheme.kind == PartitionKind::Cells;
    std::span<const std::uint8_t> p(share.payload);
    std::size_t pos = 0;
    std::uint64_t total = 0;
    std::vector<VarRow> rows;
    for (const auto& [row, lo, hi] : spans) {
        if (var) {
            if (get_uint(p, pos, 4) != hi - lo)
                throw wire_error("span length disagrees with the partition geometry");
        } else if (share.header.count != hi - lo) {
            throw wire_error("row width disagrees with the header");
        }
        VarRow vr{row, lo, hi, {}};
        for (unsigned col = lo; col < hi; ++col)
            vr.elems.emplace_back(col, get_uint(p, pos, value_bytes));
        total += hi - lo;
        rows.push_back(std::move(vr));
    }
    if (pos != p.size()) throw wire_error("trailing bytes in share payload");
    if (var && total != share.header.count)
        throw wire_error("element count disagrees with the header");
    return rows;
}

void apply_item_share(const Share& share, unsigned receiver, Sketch& sum, const WireContext& ctx,
                      WireStats* stats) {
    if (share.header.partition != 0) throw wire_error("item shares carry partition id 0");
    const bool with_freq = share.header.rep == static_cast<std::uint8_t>(RepKind::FlwHash);
    std::span<const std::uint8_t> p(share.payload);
    std::size_t pos = 0;
    std::vector<std::pair<FlowId, std::uint64_t>> entries;
    for (std::uint32_t e = 0; e < share.header.count; ++e) {
        FlowId id = get_id(p, pos, ctx.cfg.bits_mid);
        std::uint64_t c = 1;
        if (with_freq) {
            c = get_uint(p, pos, field_bytes(ctx.cfg.bits_B));
            if (c == 0) throw wire_error("zero frequency is never encoded");
        }
        entries.emplace_back(id, c);
    }
    if (pos != p.size()) throw wire_error("trailing bytes in share payload");

    bool covered = false;
    for (const auto* blk : ctx.mapping->held_by(receiver)) {
        std::int64_t coeff = 0;
        for (const auto& [node, k] : blk->terms)
            if (node == share.header.sender) coeff = k;
        if (coeff == 0) continue;
        covered = true;
        const auto spans = partition_row_spans(ctx.scheme, ctx.d, ctx.w, blk->partition);
        for (const auto& [id, c] : entries) {
            for (const auto& [row, lo, hi] : spans) {
                const unsigned col = sum.hash().col(row, id);
                if (stats) ++stats->hash_ops;
                if (ctx.scheme.kind == PartitionKind::Cells && stats) ++stats->membership_tests;
                if (col >= lo && col < hi)
                    sum.add_cell(row, col, static_cast<std::uint64_t>(coeff) * c);
            }
        }
    }
    if (!covered) throw wire_error("share does not match the coverage mapping");
}

void apply_counter_share(const Share& share, unsigned receiver, Sketch& sum,
                         const WireContext& ctx) {
    const auto& h = share.header;
    if (h.partition == 0 || h.partition > ctx.scheme.p)
        throw wire_error("partition id out of range");
    const auto coeff = static_cast<std::uint64_t>(
        block_coefficient(*ctx.mapping, receiver, h.partition, h.sender));
    std::vector<VarRow> rows;
    const auto kind = static_cast<RepKind>(h.rep);
    if (kind == RepKind::CntBuff && ctx.scheme.kind != PartitionKind::Cells)
        rows = parse_fixed_indices(share, ctx);
    else if (kind == RepKind::CntBuff)
        rows = parse_var(share, ctx, 0);
    else
        rows = parse_var(share, ctx, field_bytes(ctx.cfg.bits_B));
    for (const auto& vr : rows)
        for (const auto& [col, delta] : vr.elems) {
            if (delta == 0) throw wire_error("zero delta is never encoded");
            sum.add_cell(vr.row, col, coeff * delta);
        }
}

void apply_full_share(const Share& share, unsigned receiver, Sketch& sum,
                      const WireContext& ctx) {
    const auto& h = share.header;
    if (h.partition == 0 || h.partition > ctx.scheme.p)
        throw wire_error("partition id out of range");
    const auto coeff = static_cast<std::uint64_t>(
        block_coefficient(*ctx.mapping, receiver, h.partition, h.sender));
    for (const auto& vr : parse_full(share, ctx))
        for (const auto& [col, value] : vr.elems)
            if (value != 0) sum.add_cell(vr.row, col, coeff * value);
}

}  // namespace

void validate_context(const WireContext& ctx) {
    if (!ctx.mapping) throw param_error("wire context: no coverage mapping");
    validate_scheme(ctx.scheme, ctx.d, ctx.w);
    if (ctx.scheme.p != ctx.mapping->p)
        throw param_error("wire context: scheme and mapping disagree on partition count");
    if (validate_batch_config(ctx.cfg, ctx.d, ctx.w) != ctx.cfg)
        throw param_error("wire context: batch config has unfilled derived widths");
}

std::vector<std::uint8_t> pack_share(const Share& share) {
    std::vector<std::uint8_t> out;
    out.reserve(kShareHeaderBytes + share.payload.size());
    const auto& h = share.header;
    put_uint(out, h.version, 1);
    put_uint(out, h.cycle, 4);
    put_uint(out, h.sender, 2);
    put_uint(out, static_cast<std::uint8_t>(h.policy), 1);
    put_uint(out, h.rep, 1);
    put_uint(out, h.partition, 2);
    put_uint(out, h.count, 4);
    out.insert(out.end(), share.payload.begin(), share.payload.end());
    return out;
}

Share unpack_share(std::span<const std::uint8_t> bytes, unsigned destination) {
    if (bytes.size() < kShareHeaderBytes) throw wire_error("share shorter than its header");
    std::size_t pos = 0;
    Share s;
    s.destination = destination;
    s.header.version = static_cast<std::uint8_t>(get_uint(bytes, pos, 1));
    if (s.header.version != kWireVersion) throw wire_error("unsupported wire version");
    s.header.cycle = static_cast<std::uint32_t>(get_uint(bytes, pos, 4));
    s.header.sender = static_cast<std::uint16_t>(get_uint(bytes, pos, 2));
    const auto policy = get_uint(bytes, pos, 1);
    if (policy < 1 || policy > 3) throw wire_error("unknown policy tag");
    s.header.policy = static_cast<PolicyTag>(policy);
    s.header.rep = static_cast<std::uint8_t>(get_uint(bytes, pos, 1));
    if (s.header.rep > 5) throw wire_error("unknown representation tag");
    s.header.partition = static_cast<std::uint16_t>(get_uint(bytes, pos, 2));
    s.header.count = static_cast<std::uint32_t>(get_uint(bytes, pos, 4));
    s.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return s;
}

std::vector<Share> encode_batch(const Batch& batch, const WireContext& ctx, std::uint32_t cycle,
                                unsigned sender, WireStats* stats) {
    validate_context(ctx);
    if (batch.b_prime == 0)
        throw param_error("refusing to encode an empty batch: send an alive share");
    switch (batch.kind()) {
        case RepKind::ItemBuff:
        case RepKind::FlwHash:
            return encode_items(batch, ctx, cycle, sender, stats);
        case RepKind::CntBuff:
            if (ctx.scheme.kind != PartitionKind::Cells)
                return encode_cnt_buff_fixed(batch, ctx, cycle, sender, stats);
            [[fallthrough]];
        case RepKind::CntHash:
        case RepKind::CntDiff:
            return encode_counters_var(batch, ctx, cycle, sender, stats);
    }
    throw param_error("unknown representation kind");
}

std::vector<Share> encode_alive(const WireContext& ctx, std::uint32_t cycle, unsigned sender,
                                WireStats* stats) {
    validate_context(ctx);
    std::vector<Share> shares;
    for (unsigned dest : ctx.mapping->covering_nodes(sender)) {
        Share s{make_header(cycle, sender, PolicyTag::Alive, 0, 0, 0), dest, {}};
        note_share(stats, s);
        shares.push_back(std::move(s));
    }
    return shares;
}

std::vector<Share> full_share_encode(const Sketch& data, const WireContext& ctx,
                                     std::uint32_t cycle, unsigned sender, WireStats* stats) {
    validate_context(ctx);
    if (data.params().d != ctx.d || data.params().w != ctx.w)
        throw param_error("full share: sketch geometry differs from the context");
    const auto& counts = data.counts();
    std::vector<Share> shares;
    if (ctx.scheme.kind == PartitionKind::Cells) {
        if (stats) stats->membership_tests += static_cast<std::uint64_t>(ctx.d) * ctx.w;
        for (unsigned q = 1; q <= ctx.scheme.p; ++q) {
            std::vector<std::uint8_t> payload;
            std::uint64_t count = 0;
            for (const auto& [row, lo, hi] : partition_row_spans(ctx.scheme, ctx.d, ctx.w, q)) {
                put_uint(payload, hi - lo, 4);
                for (unsigned col = lo; col < hi; ++col)
                    put_uint(payload, counts(row, col), field_bytes(ctx.cfg.bits_N));
                count += hi - lo;
            }
            for (unsigned dest : partition_dests(*ctx.mapping, sender, q)) {
                Share s{make_header(cycle, sender, PolicyTag::Full, 0, q, count), dest, payload};
                note_share(stats, s);
                shares.push_back(std::move(s));
            }
        }
        return shares;
    }
    if (ctx.scheme.kind == PartitionKind::Rows && stats) stats->membership_tests += ctx.d;
    for (unsigned q = 1; q <= ctx.scheme.p; ++q) {
        std::vector<std::uint8_t> payload;
        for (const auto& [row, lo, hi] : partition_row_spans(ctx.scheme, ctx.d, ctx.w, q))
            for (unsigned col = lo; col < hi; ++col)
                put_uint(payload, counts(row, col), field_bytes(ctx.cfg.bits_N));
        for (unsigned dest : partition_dests(*ctx.mapping, sender, q)) {
            Share s{make_header(cycle, sender, PolicyTag::Full, 0, q, ctx.w), dest, payload};
            note_share(stats, s);
            shares.push_back(std::move(s));
        }
    }
    return shares;
}

void decode_apply(const Share& share, unsigned receiver, Sketch& sum, const WireContext& ctx,
                  WireStats* stats) {
    validate_context(ctx);
    const auto& h = share.header;
    if (h.version != kWireVersion) throw wire_error("unsupported wire version");
    switch (h.policy) {
        case PolicyTag::Alive:
            if (h.rep != 0 || h.count != 0 || !share.payload.empty())
                throw wire_error("malformed alive share");
            return;
        case PolicyTag::Full:
            if (h.rep != 0) throw wire_error("full shares carry no representation tag");
            apply_full_share(share, receiver, sum, ctx);
            return;
        case PolicyTag::Incremental:
            break;
    }
    switch (static_cast<RepKind>(h.rep)) {
        case RepKind::ItemBuff:
        case RepKind::FlwHash:
            apply_item_share(share, receiver, sum, ctx, stats);
            return;
        case RepKind::CntBuff:
        case RepKind::CntHash:
        case RepKind::CntDiff:
            apply_counter_share(share, receiver, sum, ctx);
            return;
    }
    throw wire_error("unknown representation tag");
}

std::vector<std::tuple<unsigned, unsigned, std::uint64_t>> decode_full_cells(
    const Share& share, const WireContext& ctx) {
    validate_context(ctx);
    const auto& h = share.header;
    if (h.version != kWireVersion) throw wire_error("unsupported wire version");
    if (h.policy != PolicyTag::Full) throw wire_error("not a full share");
    if (h.partition == 0 || h.partition > ctx.scheme.p)
        throw wire_error("partition id out of range");
    std::vector<std::tuple<unsigned, unsigned, std::uint64_t>> cells;
    for (const auto& vr : parse_full(share, ctx))
        for (const auto& [col, value] : vr.elems) cells.emplace_back(vr.row, col, value);
    return cells;
}

}  // namespace sketchguard
