#include "sketchguard/batch.hpp"

#include <algorithm>

namespace sketchguard {

std::string_view rep_name(RepKind kind) {
    switch (kind) {
        case RepKind::ItemBuff: return "item_buff";
        case RepKind::CntBuff: return "cnt_buff";
        case RepKind::FlwHash: return "flw_hash";
        case RepKind::CntHash: return "cnt_hash";
        case RepKind::CntDiff: return "cnt_diff";
    }
    throw param_error("unknown representation kind");
}

RepKind rep_from_name(std::string_view name) {
    for (auto kind : {RepKind::ItemBuff, RepKind::CntBuff, RepKind::FlwHash, RepKind::CntHash,
                      RepKind::CntDiff})
        if (rep_name(kind) == name) return kind;
    throw param_error("unknown representation name: " + std::string(name));
}

BatchConfig validate_batch_config(BatchConfig cfg, unsigned d, unsigned w) {
    if (d == 0 || w == 0) throw param_error("batch config: geometry must be non-empty");
    if (cfg.B == 0) throw param_error("batch config: B must be >= 1");
    if (cfg.B_l > cfg.B) throw param_error("batch config: B_l must be within [1, B]");
    const unsigned need_B = static_cast<unsigned>(std::bit_width(cfg.B));
    if (cfg.bits_B == 0) cfg.bits_B = need_B;
    if (cfg.bits_B != need_B)
        throw param_error("batch config: bits_B must equal ceil(log2(B + 1))");
    const unsigned need_w = static_cast<unsigned>(std::bit_width(w));
    if (cfg.bits_w == 0) cfg.bits_w = need_w;
    if (cfg.bits_w < need_w)
        throw param_error("batch config: bits_w cannot hold a 1-based column index");
    if (cfg.bits_mid == 0 || cfg.bits_mid > 256)
        throw param_error("batch config: bits_mid must be in [1, 256]");
    if (cfg.bits_N == 0 || cfg.bits_N > 64)
        throw param_error("batch config: bits_N must be in [1, 64]");
    if (!(cfg.alpha > 0.0) || cfg.alpha > 1.0)
        throw param_error("batch config: alpha must be in (0, 1]");
    if (cfg.beta_hat < 1.0)
        throw param_error("batch config: beta_hat must be >= 1");
    return cfg;
}

std::uint64_t Batch::distinct_entries() const {
    switch (kind()) {
        case RepKind::ItemBuff: return b_prime;
        case RepKind::FlwHash: return std::get<FlwHashRep>(rep).freq.size();
        default: return b_prime;
    }
}

std::uint64_t Batch::modified_counters() const {
    switch (kind()) {
        case RepKind::ItemBuff:
        case RepKind::FlwHash: return 0;
        case RepKind::CntBuff: {
            const auto& m = std::get<CntBuffRep>(rep).idx;
            return static_cast<std::uint64_t>(m.rows()) * b_prime;
        }
        case RepKind::CntHash: {
            std::uint64_t c = 0;
            for (const auto& t : std::get<CntHashRep>(rep).tables) c += t.size();
            return c;
        }
        case RepKind::CntDiff: {
            const auto& m = std::get<CntDiffRep>(rep).diff;
            std::uint64_t c = 0;
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    if (m(i, j) != 0) ++c;
            return c;
        }
    }
    throw param_error("unknown representation kind");
}

Batch make_batch(const BatchConfig& cfg, unsigned d, unsigned w) {
    Batch b;
    switch (cfg.representation) {
        case RepKind::ItemBuff: {
            ItemBuffRep r;
            r.items.reserve(cfg.local_cap());
            b.rep = std::move(r);
            break;
        }
        case RepKind::CntBuff: {
            CntBuffRep r;
            r.idx.setZero(d, cfg.local_cap());
            b.rep = std::move(r);
            break;
        }
        case RepKind::FlwHash:
            b.rep = FlwHashRep{};
            break;
        case RepKind::CntHash: {
            CntHashRep r;
            r.tables.resize(d);
            b.rep = std::move(r);
            break;
        }
        case RepKind::CntDiff: {
            CntDiffRep r;
            r.diff = CountMatrix::Zero(d, w);
            b.rep = std::move(r);
            break;
        }
    }
    return b;
}

void record(Batch& batch, const FlowId& x, const HashFamily& hash) {
    switch (batch.kind()) {
        case RepKind::ItemBuff:
            std::get<ItemBuffRep>(batch.rep).items.push_back(x);
            break;
        case RepKind::CntBuff: {
            auto& m = std::get<CntBuffRep>(batch.rep).idx;
            for (unsigned i = 0; i < hash.rows(); ++i)
                m(i, batch.b_prime) = hash.col(i, x);
            break;
        }
        case RepKind::FlwHash:
            ++std::get<FlwHashRep>(batch.rep).freq[x];
            break;
        case RepKind::CntHash: {
            auto& tables = std::get<CntHashRep>(batch.rep).tables;
            for (unsigned i = 0; i < hash.rows(); ++i) ++tables[i][hash.col(i, x)];
            break;
        }
        case RepKind::CntDiff: {
            auto& m = std::get<CntDiffRep>(batch.rep).diff;
            for (unsigned i = 0; i < hash.rows(); ++i) ++m(i, hash.col(i, x));
            break;
        }
    }
    ++batch.b_prime;
}

bool would_overflow(const Batch& batch, const FlowId& x, const HashFamily& hash,
                    const BatchConfig& cfg) {
    const std::uint64_t capacity = cfg.table_capacity();
    switch (batch.kind()) {
        case RepKind::FlwHash: {
            const auto& freq = std::get<FlwHashRep>(batch.rep).freq;
            return freq.size() >= capacity && !freq.contains(x);
        }
        case RepKind::CntHash: {
            const auto& tables = std::get<CntHashRep>(batch.rep).tables;
            for (unsigned i = 0; i < hash.rows(); ++i)
                if (tables[i].size() >= capacity && !tables[i].contains(hash.col(i, x)))
                    return true;
            return false;
        }
        default:
            return false;
    }
}

SmartCms::SmartCms(const SketchParams& params, const BatchConfig& cfg)
    : sketch_(params),
      cfg_(validate_batch_config(cfg, params.d, params.w)),
      batch_(make_batch(cfg_, params.d, params.w)) {}

std::optional<FlushEvent> SmartCms::smart_update(const FlowId& x) {
    std::optional<FlushEvent> event;
    if (would_overflow(batch_, x, sketch_.hash(), cfg_)) {
        // Flush first, then record into the fresh structure; the tables
        // never resize. A capacity of at least one key makes a second flush
        // within the same update impossible.
        event = FlushEvent{flush(), true};
    }
    record(batch_, x, sketch_.hash());
    if (batch_.b_prime == cfg_.local_cap()) event = FlushEvent{flush(), false};
    return event;
}

std::uint64_t SmartCms::smart_query(const FlowId& x) const {
    const auto& counts = sketch_.counts();
    const auto& hash = sketch_.hash();
    switch (batch_.kind()) {
        case RepKind::ItemBuff: {
            const auto& items = std::get<ItemBuffRep>(batch_.rep).items;
            const auto n = static_cast<std::uint64_t>(std::count(items.begin(), items.end(), x));
            return sketch_.query(x) + n;
        }
        case RepKind::FlwHash: {
            const auto& freq = std::get<FlwHashRep>(batch_.rep).freq;
            const auto it = freq.find(x);
            return sketch_.query(x) + (it == freq.end() ? 0 : it->second);
        }
        case RepKind::CntBuff: {
            // Per-row pending delta is how often the row's recorded indices
            // hit this item's column. Minimums are taken over the sums: the
            // sketch's and the batch's own minima may sit in different rows.
            const auto& m = std::get<CntBuffRep>(batch_.rep).idx;
            std::uint64_t est = ~0ull;
            for (unsigned i = 0; i < hash.rows(); ++i) {
                const unsigned col = hash.col(i, x);
                std::uint64_t delta = 0;
                for (std::uint32_t j = 0; j < batch_.b_prime; ++j)
                    if (m(i, j) == col) ++delta;
                est = std::min(est, counts(i, col) + delta);
            }
            return est;
        }
        case RepKind::CntHash: {
            const auto& tables = std::get<CntHashRep>(batch_.rep).tables;
            std::uint64_t est = ~0ull;
            for (unsigned i = 0; i < hash.rows(); ++i) {
                const unsigned col = hash.col(i, x);
                const auto it = tables[i].find(col);
                const std::uint64_t delta = it == tables[i].end() ? 0 : it->second;
                est = std::min(est, counts(i, col) + delta);
            }
            return est;
        }
        case RepKind::CntDiff: {
            const auto& diff = std::get<CntDiffRep>(batch_.rep).diff;
            std::uint64_t est = ~0ull;
            for (unsigned i = 0; i < hash.rows(); ++i) {
                const unsigned col = hash.col(i, x);
                est = std::min(est, counts(i, col) + diff(i, col));
            }
            return est;
        }
    }
    throw param_error("unknown representation kind");
}

Batch SmartCms::flush() {
    apply_batch();
    Batch out = std::move(batch_);
    batch_ = make_batch(cfg_, sketch_.params().d, sketch_.params().w);
    return out;
}

void SmartCms::apply_batch() {
    if (batch_.b_prime == 0) return;
    switch (batch_.kind()) {
        case RepKind::ItemBuff:
            for (const auto& x : std::get<ItemBuffRep>(batch_.rep).items) sketch_.update(x);
            return;
        case RepKind::FlwHash:
            for (const auto& [x, c] : std::get<FlwHashRep>(batch_.rep).freq)
                sketch_.update(x, c);
            return;
        case RepKind::CntBuff: {
            const auto& m = std::get<CntBuffRep>(batch_.rep).idx;
            for (unsigned i = 0; i < sketch_.params().d; ++i)
                for (std::uint32_t j = 0; j < batch_.b_prime; ++j)
                    sketch_.add_cell(i, m(i, j), 1);
            break;
        }
        case RepKind::CntHash: {
            const auto& tables = std::get<CntHashRep>(batch_.rep).tables;
            for (unsigned i = 0; i < sketch_.params().d; ++i)
                for (const auto& [col, delta] : tables[i]) sketch_.add_cell(i, col, delta);
            break;
        }
        case RepKind::CntDiff: {
            const auto& diff = std::get<CntDiffRep>(batch_.rep).diff;
            for (unsigned i = 0; i < sketch_.params().d; ++i)
                for (unsigned j = 0; j < sketch_.params().w; ++j)
                    if (diff(i, j) != 0) sketch_.add_cell(i, j, diff(i, j));
            break;
        }
    }
    // The counter kinds bypass update(), so account for the items here.
    sketch_.set_total(sketch_.total() + batch_.b_prime);
}

CountMatrix batch_delta(const Batch& batch, const HashFamily& hash, unsigned d, unsigned w) {
    CountMatrix delta = CountMatrix::Zero(d, w);
    switch (batch.kind()) {
        case RepKind::ItemBuff:
            for (const auto& x : std::get<ItemBuffRep>(batch.rep).items)
                for (unsigned i = 0; i < d; ++i) delta(i, hash.col(i, x)) += 1;
            break;
        case RepKind::FlwHash:
            for (const auto& [x, c] : std::get<FlwHashRep>(batch.rep).freq)
                for (unsigned i = 0; i < d; ++i) delta(i, hash.col(i, x)) += c;
            break;
        case RepKind::CntBuff: {
            const auto& m = std::get<CntBuffRep>(batch.rep).idx;
            for (unsigned i = 0; i < d; ++i)
                for (std::uint32_t j = 0; j < batch.b_prime; ++j) delta(i, m(i, j)) += 1;
            break;
        }
        case RepKind::CntHash: {
            const auto& tables = std::get<CntHashRep>(batch.rep).tables;
            for (unsigned i = 0; i < d; ++i)
                for (const auto& [col, c] : tables[i]) delta(i, col) += c;
            break;
        }
        case RepKind::CntDiff:
            delta = std::get<CntDiffRep>(batch.rep).diff;
            break;
    }
    return delta;
}

}  // namespace sketchguard
