#include "sketchguard/cost.hpp"

#include "sketchguard/wire.hpp"

#include <algorithm>
#include <numeric>

namespace sketchguard {

namespace {

unsigned field_bytes(unsigned bits) { return (bits + 7) / 8; }

// Distinct holders other than the sender covering (sender, q).
std::uint64_t dest_count(const CoverageMapping& m, unsigned sender, unsigned q) {
    std::vector<unsigned> seen;
    for (const auto* b : m.covers(sender, q))
        if (b->holder != sender && std::find(seen.begin(), seen.end(), b->holder) == seen.end())
            seen.push_back(b->holder);
    return seen.size();
}

// Hash recomputations one receiver performs per delivered entry: one per row
// each of its covering blocks' partitions meet. Under Cells every
// recomputation is followed by a membership test.
std::uint64_t receiver_rows_per_entry(const CoverageMapping& m, unsigned sender,
                                      const PartitionScheme& scheme, unsigned d, unsigned w) {
    std::uint64_t rows = 0;
    for (unsigned node = 0; node < m.node_count(); ++node) {
        if (node == sender) continue;
        for (const auto* blk : m.held_by(node)) {
            bool covers_sender = false;
            for (const auto& [term, coeff] : blk->terms)
                if (term == sender) covers_sender = true;
            if (covers_sender)
                rows += partition_row_spans(scheme, d, w, blk->partition).size();
        }
    }
    return rows;
}

// Payload bits of the variable-length counter encoding: a u32 prefix per
// (covered row, partition) plus the routed elements, each copied to every
// destination covering its partition.
std::uint64_t var_traffic_bits(const CoverageMapping& m, unsigned sender,
                               const PartitionScheme& scheme, unsigned d, unsigned w,
                               unsigned elem_bits, const std::vector<std::uint64_t>& per_q) {
    std::uint64_t bits = 0;
    for (unsigned q = 1; q <= scheme.p; ++q) {
        const std::uint64_t rows = partition_row_spans(scheme, d, w, q).size();
        bits += dest_count(m, sender, q) * (rows * 32 + per_q[q - 1] * elem_bits);
    }
    return bits;
}

std::uint64_t var_share_count(const CoverageMapping& m, unsigned sender,
                              const PartitionScheme& scheme) {
    std::uint64_t n = 0;
    for (unsigned q = 1; q <= scheme.p; ++q) n += dest_count(m, sender, q);
    return n;
}

std::vector<std::uint64_t> resolve_per_partition(const PartitionScheme& scheme,
                                                 std::uint64_t total,
                                                 const CostInputs& in) {
    if (scheme.p == 1) return {total};
    if (in.elems_per_partition.size() != scheme.p)
        throw param_error("cost model: per-partition element counts required");
    const std::uint64_t sum = std::accumulate(in.elems_per_partition.begin(),
                                              in.elems_per_partition.end(), std::uint64_t{0});
    if (sum != total)
        throw param_error("cost model: per-partition element counts disagree with the total");
    return in.elems_per_partition;
}

}  // namespace

std::vector<std::uint64_t> elements_per_partition(const Batch& batch,
                                                  const PartitionScheme& scheme, unsigned d,
                                                  unsigned w) {
    std::vector<std::uint64_t> per_q(scheme.p, 0);
    switch (batch.kind()) {
        case RepKind::ItemBuff:
        case RepKind::FlwHash:
            return {};
        case RepKind::CntBuff: {
            const auto& idx = std::get<CntBuffRep>(batch.rep).idx;
            for (unsigned i = 0; i < d; ++i)
                for (std::uint32_t j = 0; j < batch.b_prime; ++j)
                    ++per_q[partition_of(i, idx(i, j), scheme, d, w) - 1];
            return per_q;
        }
        case RepKind::CntHash: {
            const auto& tables = std::get<CntHashRep>(batch.rep).tables;
            for (unsigned i = 0; i < d; ++i)
                for (const auto& [col, delta] : tables[i])
                    ++per_q[partition_of(i, col, scheme, d, w) - 1];
            return per_q;
        }
        case RepKind::CntDiff: {
            const auto& diff = std::get<CntDiffRep>(batch.rep).diff;
            for (unsigned i = 0; i < d; ++i)
                for (unsigned j = 0; j < w; ++j)
                    if (diff(i, j) != 0) ++per_q[partition_of(i, j, scheme, d, w) - 1];
            return per_q;
        }
    }
    throw param_error("unknown representation kind");
}

CostEstimate cost_model(RepKind rep, const CoverageMapping& mapping, unsigned sender,
                        const PartitionScheme& scheme, unsigned d, unsigned w,
                        const BatchConfig& cfg, const CostInputs& in) {
    validate_scheme(scheme, d, w);
    if (scheme.p != mapping.p)
        throw param_error("cost model: scheme and mapping disagree on partition count");
    CostEstimate out;
    const std::uint64_t r_c = mapping.covering_nodes(sender).size();
    const std::uint64_t header = kShareHeaderBytes * 8;
    switch (rep) {
        case RepKind::ItemBuff: {
            out.extra_space_bits = static_cast<std::uint64_t>(cfg.B) * cfg.bits_mid;
            out.shares = r_c;
            out.traffic_bits = r_c * in.b_prime * 8ull * field_bytes(cfg.bits_mid);
            const std::uint64_t rows = receiver_rows_per_entry(mapping, sender, scheme, d, w);
            out.remote_ops = in.b_prime * rows;
            if (scheme.kind == PartitionKind::Cells) out.membership_tests = in.b_prime * rows;
            break;
        }
        case RepKind::FlwHash: {
            out.extra_space_bits = cfg.table_capacity() * (cfg.bits_mid + cfg.bits_B);
            out.shares = r_c;
            out.traffic_bits =
                r_c * in.b * 8ull * (field_bytes(cfg.bits_mid) + field_bytes(cfg.bits_B));
            out.local_ops = in.b_prime;
            const std::uint64_t rows = receiver_rows_per_entry(mapping, sender, scheme, d, w);
            out.remote_ops = in.b * rows;
            if (scheme.kind == PartitionKind::Cells) out.membership_tests = in.b * rows;
            break;
        }
        case RepKind::CntBuff: {
            out.extra_space_bits = static_cast<std::uint64_t>(d) * cfg.B * cfg.bits_w;
            out.shares = var_share_count(mapping, sender, scheme);
            if (scheme.kind == PartitionKind::Cells) {
                const auto per_q = resolve_per_partition(
                    scheme, static_cast<std::uint64_t>(d) * in.b_prime, in);
                out.traffic_bits = var_traffic_bits(mapping, sender, scheme, d, w,
                                                    8 * field_bytes(cfg.bits_w), per_q);
                out.membership_tests = static_cast<std::uint64_t>(d) * in.b_prime;
            } else {
                for (unsigned q = 1; q <= scheme.p; ++q) {
                    const std::uint64_t rows = partition_row_spans(scheme, d, w, q).size();
                    out.traffic_bits += dest_count(mapping, sender, q) * rows * in.b_prime *
                                        8ull * field_bytes(cfg.bits_w);
                }
                if (scheme.kind == PartitionKind::Rows) out.membership_tests = d;
            }
            break;
        }
        case RepKind::CntHash:
        case RepKind::CntDiff: {
            out.extra_space_bits =
                rep == RepKind::CntHash
                    ? static_cast<std::uint64_t>(d) * cfg.table_capacity() *
                          (cfg.bits_w + cfg.bits_B)
                    : static_cast<std::uint64_t>(d) * w * cfg.bits_B;
            out.shares = var_share_count(mapping, sender, scheme);
            const auto per_q = resolve_per_partition(scheme, in.c, in);
            out.traffic_bits =
                var_traffic_bits(mapping, sender, scheme, d, w,
                                 8 * (field_bytes(cfg.bits_w) + field_bytes(cfg.bits_B)), per_q);
            if (rep == RepKind::CntHash) out.local_ops = static_cast<std::uint64_t>(d) * in.b_prime;
            if (scheme.kind == PartitionKind::Rows) out.membership_tests = d;
            if (scheme.kind == PartitionKind::Cells) out.membership_tests = in.c;
            break;
        }
    }
    out.header_bits = out.shares * header;
    return out;
}

CostEstimate full_share_cost(const CoverageMapping& mapping, unsigned sender,
                             const PartitionScheme& scheme, unsigned d, unsigned w,
                             const BatchConfig& cfg) {
    validate_scheme(scheme, d, w);
    if (scheme.p != mapping.p)
        throw param_error("cost model: scheme and mapping disagree on partition count");
    CostEstimate out;
    for (unsigned q = 1; q <= scheme.p; ++q) {
        const auto spans = partition_row_spans(scheme, d, w, q);
        std::uint64_t cells = 0;
        for (const auto& [row, lo, hi] : spans) cells += hi - lo;
        const std::uint64_t dests = dest_count(mapping, sender, q);
        out.shares += dests;
        if (scheme.kind == PartitionKind::Cells)
            out.traffic_bits += dests * (spans.size() * 32 + cells * 8ull * field_bytes(cfg.bits_N));
        else
            out.traffic_bits += dests * cells * 8ull * field_bytes(cfg.bits_N);
    }
    if (scheme.kind == PartitionKind::Rows) out.membership_tests = d;
    if (scheme.kind == PartitionKind::Cells)
        out.membership_tests = static_cast<std::uint64_t>(d) * w;
    out.header_bits = out.shares * kShareHeaderBytes * 8;
    return out;
}

}  // namespace sketchguard
