#include "sketchguard/simnet.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <string_view>
#include <tuple>
#include <utility>

#include <json.hpp>

#include "sketchguard/hashing.hpp"

namespace sketchguard {

namespace {

using nlohmann::json;

std::string_view mapping_name(MappingKind kind) {
    switch (kind) {
        case MappingKind::Clique: return "clique";
        case MappingKind::ImbalancedSpace: return "imbalanced_space";
        case MappingKind::SweetSpot: return "sweet_spot";
        case MappingKind::Dedicated: return "dedicated";
        case MappingKind::Distributed: return "distributed";
    }
    throw param_error("unknown mapping kind");
}

MappingKind mapping_from_name(std::string_view name) {
    for (auto kind : {MappingKind::Clique, MappingKind::ImbalancedSpace, MappingKind::SweetSpot,
                      MappingKind::Dedicated, MappingKind::Distributed})
        if (mapping_name(kind) == name) return kind;
    throw param_error("unknown mapping name: " + std::string(name));
}

std::string_view scheme_kind_name(PartitionKind kind) {
    switch (kind) {
        case PartitionKind::Single: return "single";
        case PartitionKind::Rows: return "rows";
        case PartitionKind::Cells: return "cells";
    }
    throw param_error("unknown partition kind");
}

PartitionKind scheme_kind_from_name(std::string_view name) {
    for (auto kind : {PartitionKind::Single, PartitionKind::Rows, PartitionKind::Cells})
        if (scheme_kind_name(kind) == name) return kind;
    throw param_error("unknown partition kind name: " + std::string(name));
}

std::string_view status_name(RecoveryStatus s) {
    switch (s) {
        case RecoveryStatus::Exact: return "exact";
        case RecoveryStatus::Semi: return "semi";
        case RecoveryStatus::Unrecoverable: return "unrecoverable";
    }
    throw param_error("unknown recovery status");
}

std::string hex_u64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t mix_u64(std::uint64_t h, std::uint64_t v) {
    std::uint8_t bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return fnv1a64(bytes, 8, h);
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const char* what) {
    if (!j.is_object()) throw param_error(std::string(what) + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw param_error(std::string(what) + ": unknown key \"" + item.key() + "\"");
    }
}

}  // namespace

SimConfig validate_sim_config(SimConfig cfg) {
    if (cfg.k == 0) throw param_error("sim config: k must be >= 1");
    if (cfg.cycles == 0) throw param_error("sim config: cycles must be >= 1");
    if (cfg.policy != PolicyTag::Full && cfg.policy != PolicyTag::Incremental)
        throw param_error("sim config: policy must be full or incremental");
    if (cfg.sketch.d == 0 || cfg.sketch.w == 0) {
        auto [d, w] = derive_dims(cfg.sketch.epsilon, cfg.sketch.delta);
        if (cfg.sketch.d == 0) cfg.sketch.d = d;
        if (cfg.sketch.w == 0) cfg.sketch.w = w;
    }
    switch (cfg.mapping) {
        case MappingKind::Clique:
        case MappingKind::ImbalancedSpace:
        case MappingKind::SweetSpot:
            if (cfg.f != 1)
                throw param_error("sim config: ring mappings cover each partition exactly once");
            break;
        case MappingKind::Dedicated:
            if (cfg.f == 0) throw param_error("sim config: dedicated needs f >= 1");
            break;
        case MappingKind::Distributed:
            cfg.f = cfg.k;  // one redundant row per node, derived
            break;
    }
    const CoverageMapping m = sim_mapping(cfg);
    if (cfg.scheme.p != m.p)
        throw param_error("sim config: scheme partition count differs from the mapping's");
    validate_scheme(cfg.scheme, cfg.sketch.d, cfg.sketch.w);
    cfg.batch = validate_batch_config(cfg.batch, cfg.sketch.d, cfg.sketch.w);
    return cfg;
}

CoverageMapping sim_mapping(const SimConfig& cfg) {
    switch (cfg.mapping) {
        case MappingKind::Dedicated:
            return coverage_from_generation(GenerationMatrix::dedicated(cfg.k, cfg.f),
                                            cfg.scheme.p);
        case MappingKind::Distributed:
            return coverage_from_generation(GenerationMatrix::distributed(cfg.k), cfg.scheme.p);
        default: return build_coverage(cfg.mapping, cfg.k, 1);
    }
}

std::optional<GenerationMatrix> sim_generation(const SimConfig& cfg) {
    if (cfg.mapping == MappingKind::Dedicated) return GenerationMatrix::dedicated(cfg.k, cfg.f);
    if (cfg.mapping == MappingKind::Distributed) return GenerationMatrix::distributed(cfg.k);
    return std::nullopt;
}

World::World(const SimConfig& cfg, std::vector<FlowId> trace, FailureScript script)
    : cfg_(validate_sim_config(cfg)),
      mapping_(sim_mapping(cfg_)),
      gen_(sim_generation(cfg_)),
      ctx_{&mapping_, cfg_.scheme, cfg_.sketch.d, cfg_.sketch.w, cfg_.batch},
      script_(std::move(script)) {
    validate_context(ctx_);

    const unsigned n = mapping_.node_count();
    nodes_.resize(n);
    totals_.resize(n);
    SketchParams sums = cfg_.sketch;
    sums.counter_bits = 64;
    for (unsigned i = 0; i < n; ++i) {
        Node& node = nodes_[i];
        node.is_data = i < cfg_.k;
        node.holds = !mapping_.held_by(i).empty();
        if (node.is_data) node.cms.emplace(cfg_.sketch, cfg_.batch);
        if (node.holds) node.tile.emplace(sums);
        node.backup_counts = CountMatrix::Zero(cfg_.sketch.d, cfg_.sketch.w);
    }

    queues_.resize(cfg_.k);
    queue_pos_.assign(cfg_.k, 0);
    trace_items_ = trace.size();
    for (std::size_t idx = 0; idx < trace.size(); ++idx) {
        const FlowId& id = trace[idx];
        if (id.bits != cfg_.batch.bits_mid)
            throw param_error("sim: trace identifier width differs from bits_mid");
        const unsigned shard = cfg_.shard == ShardPolicy::Hash
                                   ? static_cast<unsigned>(mix_to_u64(id) % cfg_.k)
                                   : static_cast<unsigned>(idx % cfg_.k);
        queues_[shard].push_back(id);
    }

    std::sort(script_.begin(), script_.end(), [](const FailureEvent& a, const FailureEvent& b) {
        return std::tie(a.cycle, a.node) < std::tie(b.cycle, b.node);
    });
    for (std::size_t i = 0; i < script_.size(); ++i) {
        const FailureEvent& ev = script_[i];
        if (ev.node >= n) throw param_error("failure script: node out of range");
        if (ev.cycle >= cfg_.cycles) throw param_error("failure script: cycle out of range");
        if (!(ev.point >= 0.0 && ev.point <= 1.0))
            throw param_error("failure script: point must lie in [0, 1]");
        if (i > 0 && script_[i - 1].cycle == ev.cycle && script_[i - 1].node == ev.node)
            throw param_error("failure script: duplicate (node, cycle) entry");
    }
}

bool World::alive(unsigned node) const { return nodes_.at(node).alive; }
bool World::is_lost(unsigned node) const { return nodes_.at(node).lost; }

const Sketch* World::data_sketch(unsigned node) const {
    const Node& nd = nodes_.at(node);
    return nd.cms ? &nd.cms->sketch() : nullptr;
}

const Sketch* World::tile(unsigned node) const {
    const Node& nd = nodes_.at(node);
    return nd.tile ? &*nd.tile : nullptr;
}

const CountMatrix* World::backup(unsigned node) const { return &nodes_.at(node).backup_counts; }

void World::step_cycle() {
    if (done()) throw param_error("sim: every configured cycle already ran");
    CycleMetrics cm;
    cm.cycle = cycle_;
    wire_.clear();

    std::vector<PendingFailure> fails;
    for (const FailureEvent& ev : script_)
        if (ev.cycle == cycle_ && !nodes_[ev.node].lost) fails.push_back({ev.node, ev.point, 0});
    auto failing = [&fails](unsigned id) -> PendingFailure* {
        for (auto& f : fails)
            if (f.node == id) return &f;
        return nullptr;
    };

    for (Node& node : nodes_) {
        node.arrivals_this_cycle = 0;
        node.shares_this_cycle = 0;
    }

    // Ingest. A node hit by a failure processes its slice only up to the
    // configured point, then drops dead; the tail of the slice and whatever
    // sat in the pending batch go with it.
    for (unsigned n = 0; n < cfg_.k; ++n) {
        Node& node = nodes_[n];
        if (!node.alive) continue;
        PendingFailure* fail = failing(n);
        const auto& queue = queues_[n];
        const std::size_t have = queue.size() - queue_pos_[n];
        const std::size_t slice = std::min<std::size_t>(cfg_.batch.B, have);
        const std::size_t limit =
            fail ? static_cast<std::size_t>(fail->point * static_cast<double>(slice)) : slice;
        for (std::size_t i = 0; i < limit; ++i) {
            auto ev = node.cms->smart_update(queue[queue_pos_[n] + i]);
            ++node.arrivals_this_cycle;
            ++cm.arrivals;
            ++totals_[n].items;
            if (ev) {
                ++cm.flushes;
                ++totals_[n].flushes;
                if (cfg_.policy == PolicyTag::Incremental) handle_flush(n, ev->batch, cm);
            }
        }
        queue_pos_[n] += slice;  // the unprocessed tail is gone either way
        if (fail) {
            fail->lost_items = (slice - limit) + node.cms->pending_items();
            kill(n);
        }
    }
    // Failures of pure holders (dedicated redundant nodes) take no items with
    // them but still drop the node before delivery.
    for (PendingFailure& f : fails) {
        Node& node = nodes_[f.node];
        if (node.alive && !node.is_data) kill(f.node);
    }

    // Boundary emissions from the survivors.
    for (unsigned n = 0; n < cfg_.k; ++n) {
        Node& node = nodes_[n];
        if (!node.alive) continue;
        Batch tail = node.cms->flush();
        if (tail.b_prime > 0) {
            ++cm.flushes;
            ++totals_[n].flushes;
            if (cfg_.policy == PolicyTag::Incremental) handle_flush(n, tail, cm);
        }
        if (cfg_.policy == PolicyTag::Full && node.arrivals_this_cycle > 0) emit_full(n, cm);
        if (node.shares_this_cycle == 0) {
            WireStats enc;
            auto shares = encode_alive(ctx_, cycle_, n, &enc);
            cm.alive_shares += enc.shares;
            cm.header_bits += enc.header_bits;
            cm.predicted_header_bits += enc.shares * kShareHeaderBytes * 8;
            totals_[n].shares_sent += enc.shares;
            for (Share& s : shares) wire_.push_back(std::move(s));
        }
    }

    deliver(cm);
    if (cfg_.policy == PolicyTag::Full) rebuild_full_tiles();
    if (!fails.empty()) recover(fails, cm);

    std::uint64_t hd = 0xcbf29ce484222325ull;
    std::uint64_t hs = hd;
    for (unsigned n = 0; n < mapping_.node_count(); ++n) {
        const Node& node = nodes_[n];
        if (node.is_data) {
            hd = mix_u64(hd, n);
            hd = mix_u64(hd, node.lost ? 0xdeadull : node.cms->sketch().digest());
        }
        if (node.holds) {
            hs = mix_u64(hs, n);
            hs = mix_u64(hs, node.lost ? 0xdeadull : node.tile->digest());
        }
    }
    cm.data_digest = hd;
    cm.sums_digest = hs;
    metrics_.push_back(cm);
    ++cycle_;
}

void World::handle_flush(unsigned n, const Batch& batch, CycleMetrics& cm) {
    Node& node = nodes_[n];
    WireStats enc;
    auto shares = encode_batch(batch, ctx_, cycle_, n, &enc);
    node.shares_this_cycle += enc.shares;
    cm.data_shares += enc.shares;
    cm.payload_bits += enc.payload_bits;
    cm.header_bits += enc.header_bits;
    cm.sender_membership += enc.membership_tests;
    totals_[n].shares_sent += enc.shares;
    totals_[n].payload_bits_sent += enc.payload_bits;
    totals_[n].membership_tests += enc.membership_tests;

    CostInputs in;
    in.b_prime = batch.b_prime;
    in.b = batch.distinct_entries();
    in.c = batch.modified_counters();
    in.elems_per_partition = elements_per_partition(batch, cfg_.scheme, ctx_.d, ctx_.w);
    const CostEstimate ce =
        cost_model(batch.kind(), mapping_, n, cfg_.scheme, ctx_.d, ctx_.w, cfg_.batch, in);
    cm.predicted_payload_bits += ce.traffic_bits;
    cm.predicted_header_bits += ce.header_bits;
    cm.predicted_membership += ce.membership_tests;
    cm.predicted_remote_ops += ce.remote_ops;
    cm.local_ops += ce.local_ops;
    totals_[n].local_ops += ce.local_ops;

    // The wire never routes a node's contribution to itself, so a holder
    // folds its own flushed delta into its stored sums locally.
    bool self_term = false;
    for (const CoverageBlock* block : mapping_.held_by(n))
        for (const auto& [t, c] : block->terms)
            if (t == n && c != 0) self_term = true;
    if (self_term) {
        const CountMatrix delta = batch_delta(batch, node.cms->sketch().hash(), ctx_.d, ctx_.w);
        for (const CoverageBlock* block : mapping_.held_by(n))
            for (const auto& [t, c] : block->terms) {
                if (t != n || c == 0) continue;
                for (const auto& [row, lo, hi] :
                     partition_row_spans(cfg_.scheme, ctx_.d, ctx_.w, block->partition))
                    for (unsigned col = lo; col < hi; ++col)
                        node.tile->counts()(row, col) +=
                            static_cast<std::uint64_t>(c) * delta(row, col);
            }
    }

    node.backup_counts = node.cms->sketch().counts();
    node.backup_total = node.cms->sketch().total();
    for (Share& s : shares) wire_.push_back(std::move(s));
}

void World::emit_full(unsigned n, CycleMetrics& cm) {
    Node& node = nodes_[n];
    WireStats enc;
    auto shares = full_share_encode(node.cms->sketch(), ctx_, cycle_, n, &enc);
    node.shares_this_cycle += enc.shares;
    cm.data_shares += enc.shares;
    cm.payload_bits += enc.payload_bits;
    cm.header_bits += enc.header_bits;
    cm.sender_membership += enc.membership_tests;
    totals_[n].shares_sent += enc.shares;
    totals_[n].payload_bits_sent += enc.payload_bits;
    totals_[n].membership_tests += enc.membership_tests;

    const CostEstimate ce = full_share_cost(mapping_, n, cfg_.scheme, ctx_.d, ctx_.w, cfg_.batch);
    cm.predicted_payload_bits += ce.traffic_bits;
    cm.predicted_header_bits += ce.header_bits;
    cm.predicted_membership += ce.membership_tests;
    cm.predicted_remote_ops += ce.remote_ops;

    node.backup_counts = node.cms->sketch().counts();
    node.backup_total = node.cms->sketch().total();
    for (Share& s : shares) wire_.push_back(std::move(s));
}

void World::deliver(CycleMetrics& cm) {
    for (const Share& share : wire_) {
        Node& dest = nodes_[share.destination];
        if (!dest.alive) continue;  // dead or lost receivers drop their inbox
        if (share.header.policy == PolicyTag::Alive) continue;
        ++totals_[share.destination].shares_received;
        if (share.header.policy == PolicyTag::Full) {
            auto [it, fresh] = dest.copies.try_emplace(share.header.sender,
                                                       CountMatrix::Zero(ctx_.d, ctx_.w));
            for (const auto& [row, col, v] : decode_full_cells(share, ctx_)) it->second(row, col) = v;
            continue;
        }
        WireStats dec;
        decode_apply(share, share.destination, *dest.tile, ctx_, &dec);
        cm.receiver_membership += dec.membership_tests;
        cm.receiver_hash_ops += dec.hash_ops;
        totals_[share.destination].hash_ops += dec.hash_ops;
        totals_[share.destination].membership_tests += dec.membership_tests;
    }
    wire_.clear();
}

void World::rebuild_full_tiles() {
    for (unsigned n = 0; n < mapping_.node_count(); ++n) {
        Node& node = nodes_[n];
        if (!node.holds || !node.alive) continue;
        node.tile->counts().setZero();
        for (const CoverageBlock* block : mapping_.held_by(n))
            for (const auto& [t, c] : block->terms) {
                if (c == 0) continue;
                const CountMatrix* src = nullptr;
                if (t == n && node.is_data) {
                    src = &node.cms->sketch().counts();
                } else {
                    auto it = node.copies.find(t);
                    if (it != node.copies.end()) src = &it->second;
                }
                if (!src) continue;  // nothing received from t yet: zero so far
                for (const auto& [row, lo, hi] :
                     partition_row_spans(cfg_.scheme, ctx_.d, ctx_.w, block->partition))
                    for (unsigned col = lo; col < hi; ++col)
                        node.tile->counts()(row, col) +=
                            static_cast<std::uint64_t>(c) * (*src)(row, col);
            }
    }
}

void World::kill(unsigned n) {
    Node& node = nodes_[n];
    node.alive = false;
    node.cms.reset();
    node.tile.reset();
    node.copies.clear();
}

void World::recover(std::vector<PendingFailure>& fails, CycleMetrics& cm) {
    (void)cm;
    std::set<unsigned> failed;
    for (const PendingFailure& f : fails) failed.insert(f.node);
    for (unsigned n = 0; n < mapping_.node_count(); ++n)
        if (nodes_[n].lost) failed.insert(n);  // their data is still unavailable

    std::map<unsigned, CountMatrix> recovered;
    std::map<unsigned, std::uint64_t> totals;
    std::map<unsigned, RecoveryStatus> status;
    std::set<unsigned> dead;

    if (gen_) {
        const RecoveryPlan plan = recovery_plan(*gen_, failed);
        if (plan.status == RecoveryStatus::Unrecoverable) {
            for (const PendingFailure& f : fails)
                if (nodes_[f.node].is_data) dead.insert(f.node);
        } else {
            RecoverySources src;
            src.data.resize(cfg_.k, nullptr);
            src.red.resize(gen_->f, nullptr);
            for (unsigned i = 0; i < cfg_.k; ++i)
                if (nodes_[i].alive) src.data[i] = &nodes_[i].cms->sketch();
            for (unsigned r = 0; r < gen_->f; ++r) {
                const unsigned holder =
                    gen_->strategy == Strategy::Dedicated ? cfg_.k + r : r;
                if (nodes_[holder].alive) src.red[r] = &*nodes_[holder].tile;
            }
            const auto out = plan.status == RecoveryStatus::Exact
                                 ? apply_plan(*gen_, plan, src, cfg_.sketch)
                                 : semi_recover(*gen_, plan, src, cfg_.sketch);
            for (const auto& [idx, sk] : out) {
                recovered.emplace(idx, sk.counts());
                totals.emplace(idx, sk.total());
                status.emplace(idx, plan.status);
            }
        }
    } else {
        const MappingRecoveryPlan plan = mapping_recovery_plan(mapping_, failed);
        for (unsigned n : plan.unrecoverable) dead.insert(n);
        recovered = run_ring_plan(plan, status);
        for (const auto& [n, counts] : recovered) totals.emplace(n, counts.row(0).sum());
    }

    // Install. Only nodes that failed this cycle come back; an earlier loss
    // stays lost even when the algebra happens to reach it.
    for (const PendingFailure& f : fails) {
        Node& node = nodes_[f.node];
        FailureOutcome out;
        out.node = f.node;
        out.cycle = cycle_;
        out.point = f.point;
        out.lost_items = f.lost_items;
        if (dead.count(f.node) != 0 || (node.is_data && recovered.count(f.node) == 0)) {
            node.lost = true;
            out.status = RecoveryStatus::Unrecoverable;
            out.verified = false;
            outcomes_.push_back(out);
            continue;
        }
        if (node.is_data) {
            const CountMatrix& rec = recovered.at(f.node);
            out.status = status.at(f.node);
            out.verified = out.status == RecoveryStatus::Exact
                               ? rec == node.backup_counts &&
                                     totals.at(f.node) == node.backup_total
                               : bool((rec.array() >= node.backup_counts.array()).all());
            reinstate(f.node, rec, totals.at(f.node));
        } else {
            out.status = RecoveryStatus::Exact;  // stored sums rebuild directly
            out.verified = true;
            node.alive = true;
        }
        outcomes_.push_back(out);
    }

    // Stored sums of everyone who came back, rebuilt from what is available
    // now. Contributions of lost nodes cannot be reproduced and drop out.
    for (const PendingFailure& f : fails) {
        Node& node = nodes_[f.node];
        if (node.lost || !node.holds) continue;
        rebuild_tile(f.node);
        if (cfg_.policy == PolicyTag::Full) {
            node.copies.clear();
            for (const CoverageBlock* block : mapping_.held_by(f.node))
                for (const auto& [t, c] : block->terms)
                    if (t != f.node && t < cfg_.k && nodes_[t].alive &&
                        node.copies.count(t) == 0)
                        node.copies.emplace(t, nodes_[t].cms->sketch().counts());
        }
    }
}

void World::reinstate(unsigned n, const CountMatrix& counts, std::uint64_t total) {
    Node& node = nodes_[n];
    node.alive = true;
    node.lost = false;
    node.cms.emplace(cfg_.sketch, cfg_.batch);
    node.cms->sketch().counts() = counts;
    node.cms->sketch().set_total(total);
    node.backup_counts = counts;
    node.backup_total = total;
}

void World::rebuild_tile(unsigned n) {
    Node& node = nodes_[n];
    SketchParams sums = cfg_.sketch;
    sums.counter_bits = 64;
    node.tile.emplace(sums);
    for (const CoverageBlock* block : mapping_.held_by(n))
        for (const auto& [t, c] : block->terms) {
            if (c == 0 || t >= cfg_.k || !nodes_[t].alive) continue;
            const CountMatrix& src = nodes_[t].cms->sketch().counts();
            for (const auto& [row, lo, hi] :
                 partition_row_spans(cfg_.scheme, ctx_.d, ctx_.w, block->partition))
                for (unsigned col = lo; col < hi; ++col)
                    node.tile->counts()(row, col) += static_cast<std::uint64_t>(c) * src(row, col);
        }
}

std::map<unsigned, CountMatrix> World::run_ring_plan(const MappingRecoveryPlan& plan,
                                                     std::map<unsigned, RecoveryStatus>& status) {
    std::map<unsigned, CountMatrix> rec;
    for (const PartitionRecoveryStep& step : plan.steps) {
        auto [it, fresh] = rec.try_emplace(step.node, CountMatrix::Zero(ctx_.d, ctx_.w));
        CountMatrix& target = it->second;
        const Node& holder = nodes_[step.block_holder];
        if (!holder.alive || !holder.tile)
            throw recovery_error("recovery: plan reads a stored sum from a dead holder");
        if (step.divisor <= 0) throw recovery_error("recovery: non-positive divisor");
        const auto divisor = static_cast<std::uint64_t>(step.divisor);
        for (const auto& [row, lo, hi] :
             partition_row_spans(cfg_.scheme, ctx_.d, ctx_.w, step.partition)) {
            for (unsigned col = lo; col < hi; ++col) {
                const std::uint64_t sum = holder.tile->counts()(row, col);
                std::uint64_t sub = 0;
                for (const auto& [t, c] : step.subtract) {
                    if (c < 0) throw recovery_error("recovery: negative subtraction term");
                    sub += static_cast<std::uint64_t>(c) * available_value(t, row, col, rec);
                }
                if (sum < sub)
                    throw recovery_error("recovery: stored sum fell below its live terms");
                const std::uint64_t residue = sum - sub;
                if (step.status == RecoveryStatus::Exact && residue % divisor != 0)
                    throw recovery_error("recovery: exact step left a fractional counter");
                target(row, col) = residue / divisor;
            }
        }
        auto [sit, inserted] = status.try_emplace(step.node, step.status);
        if (!inserted && step.status == RecoveryStatus::Semi) sit->second = RecoveryStatus::Semi;
    }
    return rec;
}

std::uint64_t World::available_value(unsigned node, unsigned row, unsigned col,
                                     const std::map<unsigned, CountMatrix>& recovered) const {
    const Node& nd = nodes_[node];
    if (nd.alive && nd.is_data) return nd.cms->sketch().counts()(row, col);
    auto it = recovered.find(node);
    if (it == recovered.end())
        throw recovery_error("recovery: step references an unavailable node");
    return it->second(row, col);
}

SimReport World::finish() {
    while (!done()) step_cycle();
    SimReport rep;
    rep.config = cfg_;
    rep.trace_items = trace_items_;
    rep.cycles = metrics_;
    rep.failures = outcomes_;
    rep.nodes = totals_;
    for (unsigned n = 0; n < mapping_.node_count(); ++n) {
        const Node& node = nodes_[n];
        rep.data_digests.push_back(!node.is_data ? "-"
                                   : node.lost  ? "lost"
                                                : hex_u64(node.cms->sketch().digest()));
        rep.tile_digests.push_back(!node.holds ? "-"
                                   : node.lost ? "lost"
                                               : hex_u64(node.tile->digest()));
        if (node.lost) ++rep.lost_nodes;
    }
    for (unsigned n = 0; n < cfg_.k; ++n)
        rep.leftover_items += queues_[n].size() - queue_pos_[n];
    const std::string csv = sim_report_to_csv(rep);
    rep.digest = fnv1a64(csv.data(), csv.size());
    return rep;
}

SimReport run_simulation(const SimConfig& cfg, const std::vector<FlowId>& trace,
                         const FailureScript& script) {
    World world(cfg, trace, script);
    return world.finish();
}

std::string sim_config_to_json(const SimConfig& cfg) {
    json j;
    j["k"] = cfg.k;
    j["f"] = cfg.f;
    j["mapping"] = std::string(mapping_name(cfg.mapping));
    j["scheme"] = {{"kind", std::string(scheme_kind_name(cfg.scheme.kind))},
                   {"p", cfg.scheme.p}};
    j["sketch"] = {{"epsilon", cfg.sketch.epsilon},
                   {"delta", cfg.sketch.delta},
                   {"d", cfg.sketch.d},
                   {"w", cfg.sketch.w},
                   {"seed", cfg.sketch.seed},
                   {"counter_bits", cfg.sketch.counter_bits}};
    j["batch"] = {{"representation", std::string(rep_name(cfg.batch.representation))},
                  {"B", cfg.batch.B},
                  {"B_l", cfg.batch.B_l},
                  {"bits_mid", cfg.batch.bits_mid},
                  {"bits_w", cfg.batch.bits_w},
                  {"bits_B", cfg.batch.bits_B},
                  {"bits_N", cfg.batch.bits_N},
                  {"alpha", cfg.batch.alpha},
                  {"beta_hat", cfg.batch.beta_hat}};
    j["policy"] = cfg.policy == PolicyTag::Full ? "full" : "incremental";
    j["cycles"] = cfg.cycles;
    j["seed"] = cfg.seed;
    j["shard"] = cfg.shard == ShardPolicy::Hash ? "hash" : "round_robin";
    return j.dump(2) + "\n";
}

SimConfig sim_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw param_error(std::string("sim config: ") + e.what());
    }
    check_keys(j, {"k", "f", "mapping", "scheme", "sketch", "batch", "policy", "cycles", "seed",
                   "shard"},
               "sim config");
    SimConfig cfg;
    try {
        if (j.contains("k")) cfg.k = j["k"].get<unsigned>();
        if (j.contains("f")) cfg.f = j["f"].get<unsigned>();
        if (j.contains("mapping"))
            cfg.mapping = mapping_from_name(j["mapping"].get<std::string>());
        if (j.contains("scheme")) {
            const json& s = j["scheme"];
            check_keys(s, {"kind", "p"}, "sim config scheme");
            if (s.contains("kind"))
                cfg.scheme.kind = scheme_kind_from_name(s["kind"].get<std::string>());
            if (s.contains("p")) cfg.scheme.p = s["p"].get<unsigned>();
        }
        if (j.contains("sketch")) {
            const json& s = j["sketch"];
            check_keys(s, {"epsilon", "delta", "d", "w", "seed", "counter_bits"},
                       "sim config sketch");
            if (s.contains("epsilon")) cfg.sketch.epsilon = s["epsilon"].get<double>();
            if (s.contains("delta")) cfg.sketch.delta = s["delta"].get<double>();
            if (s.contains("d")) cfg.sketch.d = s["d"].get<unsigned>();
            if (s.contains("w")) cfg.sketch.w = s["w"].get<unsigned>();
            if (s.contains("seed")) cfg.sketch.seed = s["seed"].get<std::uint64_t>();
            if (s.contains("counter_bits"))
                cfg.sketch.counter_bits = s["counter_bits"].get<unsigned>();
        }
        if (j.contains("batch")) {
            const json& b = j["batch"];
            check_keys(b, {"representation", "B", "B_l", "bits_mid", "bits_w", "bits_B",
                           "bits_N", "alpha", "beta_hat"},
                       "sim config batch");
            if (b.contains("representation"))
                cfg.batch.representation = rep_from_name(b["representation"].get<std::string>());
            if (b.contains("B")) cfg.batch.B = b["B"].get<std::uint32_t>();
            if (b.contains("B_l")) cfg.batch.B_l = b["B_l"].get<std::uint32_t>();
            if (b.contains("bits_mid")) cfg.batch.bits_mid = b["bits_mid"].get<unsigned>();
            if (b.contains("bits_w")) cfg.batch.bits_w = b["bits_w"].get<unsigned>();
            if (b.contains("bits_B")) cfg.batch.bits_B = b["bits_B"].get<unsigned>();
            if (b.contains("bits_N")) cfg.batch.bits_N = b["bits_N"].get<unsigned>();
            if (b.contains("alpha")) cfg.batch.alpha = b["alpha"].get<double>();
            if (b.contains("beta_hat")) cfg.batch.beta_hat = b["beta_hat"].get<double>();
        }
        if (j.contains("policy")) {
            const auto p = j["policy"].get<std::string>();
            if (p == "full") cfg.policy = PolicyTag::Full;
            else if (p == "incremental") cfg.policy = PolicyTag::Incremental;
            else throw param_error("sim config: policy must be \"full\" or \"incremental\"");
        }
        if (j.contains("cycles")) cfg.cycles = j["cycles"].get<std::uint32_t>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("shard")) {
            const auto s = j["shard"].get<std::string>();
            if (s == "hash") cfg.shard = ShardPolicy::Hash;
            else if (s == "round_robin") cfg.shard = ShardPolicy::RoundRobin;
            else throw param_error("sim config: shard must be \"hash\" or \"round_robin\"");
        }
    } catch (const json::exception& e) {
        throw param_error(std::string("sim config: ") + e.what());
    }
    return cfg;
}

FailureScript failure_script_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw param_error(std::string("failure script: ") + e.what());
    }
    if (!j.is_array()) throw param_error("failure script: expected a JSON array");
    FailureScript script;
    for (const json& e : j) {
        check_keys(e, {"node", "cycle", "point"}, "failure script entry");
        FailureEvent ev;
        try {
            ev.node = e.at("node").get<unsigned>();
            ev.cycle = e.at("cycle").get<std::uint32_t>();
            if (e.contains("point")) ev.point = e["point"].get<double>();
        } catch (const json::exception& ex) {
            throw param_error(std::string("failure script: ") + ex.what());
        }
        script.push_back(ev);
    }
    return script;
}

std::string sim_report_to_json(const SimReport& report) {
    json j;
    j["config"] = json::parse(sim_config_to_json(report.config));
    j["trace_items"] = report.trace_items;
    json cycles = json::array();
    for (const CycleMetrics& c : report.cycles)
        cycles.push_back({{"cycle", c.cycle},
                          {"arrivals", c.arrivals},
                          {"flushes", c.flushes},
                          {"data_shares", c.data_shares},
                          {"alive_shares", c.alive_shares},
                          {"payload_bits", c.payload_bits},
                          {"header_bits", c.header_bits},
                          {"sender_membership", c.sender_membership},
                          {"receiver_membership", c.receiver_membership},
                          {"receiver_hash_ops", c.receiver_hash_ops},
                          {"local_ops", c.local_ops},
                          {"predicted_payload_bits", c.predicted_payload_bits},
                          {"predicted_header_bits", c.predicted_header_bits},
                          {"predicted_membership", c.predicted_membership},
                          {"predicted_remote_ops", c.predicted_remote_ops},
                          {"sums_digest", hex_u64(c.sums_digest)},
                          {"data_digest", hex_u64(c.data_digest)}});
    j["cycles"] = cycles;
    json fails = json::array();
    for (const FailureOutcome& f : report.failures)
        fails.push_back({{"node", f.node},
                         {"cycle", f.cycle},
                         {"point", f.point},
                         {"status", std::string(status_name(f.status))},
                         {"verified", f.verified},
                         {"lost_items", f.lost_items}});
    j["failures"] = fails;
    json nodes = json::array();
    for (std::size_t i = 0; i < report.nodes.size(); ++i) {
        const NodeTotals& t = report.nodes[i];
        nodes.push_back({{"node", i},
                         {"items", t.items},
                         {"flushes", t.flushes},
                         {"shares_sent", t.shares_sent},
                         {"payload_bits_sent", t.payload_bits_sent},
                         {"local_ops", t.local_ops},
                         {"shares_received", t.shares_received},
                         {"hash_ops", t.hash_ops},
                         {"membership_tests", t.membership_tests}});
    }
    j["nodes"] = nodes;
    j["final"] = {{"data_digests", report.data_digests},
                  {"tile_digests", report.tile_digests},
                  {"leftover_items", report.leftover_items},
                  {"lost_nodes", report.lost_nodes},
                  {"digest", hex_u64(report.digest)}};
    return j.dump(2) + "\n";
}

std::string sim_report_to_csv(const SimReport& report) {
    std::ostringstream os;
    os << "cycle,arrivals,flushes,data_shares,alive_shares,payload_bits,header_bits,"
          "sender_membership,receiver_membership,receiver_hash_ops,local_ops,"
          "predicted_payload_bits,predicted_header_bits,predicted_membership,"
          "predicted_remote_ops,sums_digest,data_digest\n";
    for (const CycleMetrics& c : report.cycles)
        os << c.cycle << ',' << c.arrivals << ',' << c.flushes << ',' << c.data_shares << ','
           << c.alive_shares << ',' << c.payload_bits << ',' << c.header_bits << ','
           << c.sender_membership << ',' << c.receiver_membership << ',' << c.receiver_hash_ops
           << ',' << c.local_ops << ',' << c.predicted_payload_bits << ','
           << c.predicted_header_bits << ',' << c.predicted_membership << ','
           << c.predicted_remote_ops << ',' << hex_u64(c.sums_digest) << ','
           << hex_u64(c.data_digest) << '\n';
    return os.str();
}

}  // namespace sketchguard
