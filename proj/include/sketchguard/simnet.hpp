#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sketchguard/batch.hpp"
#include "sketchguard/cost.hpp"
#include "sketchguard/coverage.hpp"
#include "sketchguard/partition.hpp"
#include "sketchguard/sketch.hpp"
#include "sketchguard/wire.hpp"

namespace sketchguard {

// Deterministic cycle simulator: k data nodes split a trace, run their
// batches, and ship shares to whoever backs them up per the coverage
// mapping. Failures are injected mid-cycle and repaired at the next
// boundary, with every repair checked against the victim's last emitted
// state. Given the same config, trace and script, two runs produce
// byte-identical reports.

enum class ShardPolicy : std::uint8_t { Hash = 0, RoundRobin = 1 };

struct SimConfig {
    unsigned k = 4;
    unsigned f = 1;  // dedicated only: redundant nodes. Rings force 1, distributed uses k.
    MappingKind mapping = MappingKind::SweetSpot;
    PartitionScheme scheme{PartitionKind::Rows, 2};
    SketchParams sketch;
    BatchConfig batch;
    PolicyTag policy = PolicyTag::Incremental;  // Full or Incremental
    std::uint32_t cycles = 1;
    std::uint64_t seed = 1;
    ShardPolicy shard = ShardPolicy::Hash;

    bool operator==(const SimConfig&) const = default;
};

// Fills every derived field (sketch dims from epsilon/delta when d or w is
// zero, batch widths from the geometry) and rejects inconsistent combinations
// such as a ring mapping with the wrong partition count. The returned config
// is what the simulation actually runs.
SimConfig validate_sim_config(SimConfig cfg);

CoverageMapping sim_mapping(const SimConfig& cfg);
// Present only for the matrix strategies (Dedicated, Distributed).
std::optional<GenerationMatrix> sim_generation(const SimConfig& cfg);

// A crash of `node` inside cycle `cycle`, after it ingested floor(point *
// slice) items of that cycle's slice. The rest of the slice and the pending
// batch are gone; everything flushed before the point was delivered.
struct FailureEvent {
    unsigned node = 0;
    std::uint32_t cycle = 0;
    double point = 0.0;  // in [0, 1]
};
using FailureScript = std::vector<FailureEvent>;

struct CycleMetrics {
    std::uint32_t cycle = 0;
    std::uint64_t arrivals = 0;
    std::uint64_t flushes = 0;      // batches merged, boundary flushes included
    std::uint64_t data_shares = 0;  // update and full shares put on the wire
    std::uint64_t alive_shares = 0;
    std::uint64_t payload_bits = 0;  // measured over all emitted shares
    std::uint64_t header_bits = 0;   // data and alive headers both
    std::uint64_t sender_membership = 0;
    std::uint64_t receiver_membership = 0;
    std::uint64_t receiver_hash_ops = 0;
    std::uint64_t local_ops = 0;  // sender-side table operations
    // Closed-form predictions accumulated per flush. Payload and header
    // bits match the measured columns exactly; the membership and remote
    // ops columns match on cycles where every receiver stayed alive.
    std::uint64_t predicted_payload_bits = 0;
    std::uint64_t predicted_header_bits = 0;
    std::uint64_t predicted_membership = 0;
    std::uint64_t predicted_remote_ops = 0;
    std::uint64_t sums_digest = 0;  // all backup tiles at the boundary
    std::uint64_t data_digest = 0;  // all data sketches at the boundary

    bool operator==(const CycleMetrics&) const = default;
};

struct NodeTotals {
    std::uint64_t items = 0;
    std::uint64_t flushes = 0;
    std::uint64_t shares_sent = 0;
    std::uint64_t payload_bits_sent = 0;
    std::uint64_t local_ops = 0;
    std::uint64_t shares_received = 0;
    std::uint64_t hash_ops = 0;
    std::uint64_t membership_tests = 0;

    bool operator==(const NodeTotals&) const = default;
};

struct FailureOutcome {
    unsigned node = 0;
    std::uint32_t cycle = 0;
    double point = 0.0;
    RecoveryStatus status = RecoveryStatus::Exact;
    // Exact repairs must reproduce the last backup bit for bit, semi repairs
    // must dominate it cell-wise. A false here means the repair math and the
    // simulated state disagree, which a correct deployment never shows.
    bool verified = false;
    std::uint64_t lost_items = 0;  // unprocessed slice plus pending batch

    bool operator==(const FailureOutcome&) const = default;
};

struct SimReport {
    SimConfig config;
    std::uint64_t trace_items = 0;
    std::vector<CycleMetrics> cycles;
    std::vector<FailureOutcome> failures;
    std::vector<NodeTotals> nodes;
    // Per node: sketch digest as hex, "-" when the node has no such state,
    // "lost" for nodes that ended the run unrecoverable.
    std::vector<std::string> data_digests;
    std::vector<std::string> tile_digests;
    std::uint64_t leftover_items = 0;  // trace items never ingested
    std::uint64_t lost_nodes = 0;
    std::uint64_t digest = 0;  // FNV-1a over the CSV rendering
};

class World {
public:
    // The trace is pre-split into k shard queues; each cycle a live data
    // node ingests up to B of its queued items.
    World(const SimConfig& cfg, std::vector<FlowId> trace, FailureScript script);

    // The wire context points into this object.
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    void step_cycle();
    std::uint32_t cycle() const { return cycle_; }
    bool done() const { return cycle_ >= cfg_.cycles; }
    // Runs any remaining cycles and assembles the report.
    SimReport finish();

    const SimConfig& config() const { return cfg_; }
    const CoverageMapping& mapping() const { return mapping_; }

    bool alive(unsigned node) const;
    bool is_lost(unsigned node) const;
    const Sketch* data_sketch(unsigned node) const;  // null unless a live data node
    const Sketch* tile(unsigned node) const;         // null unless a live holder
    const CountMatrix* backup(unsigned node) const;

private:
    struct Node {
        bool is_data = false;
        bool holds = false;
        bool alive = true;
        bool lost = false;
        std::optional<SmartCms> cms;
        std::optional<Sketch> tile;                // sums, 64-bit counters
        std::map<unsigned, CountMatrix> copies;    // Full policy, per sender
        CountMatrix backup_counts;
        std::uint64_t backup_total = 0;
        std::uint64_t arrivals_this_cycle = 0;
        std::uint64_t shares_this_cycle = 0;
    };

    struct PendingFailure {
        unsigned node = 0;
        double point = 0.0;
        std::uint64_t lost_items = 0;
    };

    void handle_flush(unsigned node, const Batch& batch, CycleMetrics& cm);
    void emit_full(unsigned node, CycleMetrics& cm);
    void deliver(CycleMetrics& cm);
    void rebuild_full_tiles();
    void rebuild_tile(unsigned node);
    void kill(unsigned node);
    void recover(std::vector<PendingFailure>& fails, CycleMetrics& cm);
    void reinstate(unsigned node, const CountMatrix& counts, std::uint64_t total);
    std::map<unsigned, CountMatrix> run_ring_plan(const MappingRecoveryPlan& plan,
                                                  std::map<unsigned, RecoveryStatus>& status);
    std::uint64_t available_value(unsigned node, unsigned row, unsigned col,
                                  const std::map<unsigned, CountMatrix>& recovered) const;

    SimConfig cfg_;
    CoverageMapping mapping_;
    std::optional<GenerationMatrix> gen_;
    WireContext ctx_;
    std::vector<Node> nodes_;
    std::vector<std::vector<FlowId>> queues_;
    std::vector<std::size_t> queue_pos_;
    FailureScript script_;  // sorted by (cycle, node)
    std::uint32_t cycle_ = 0;
    std::uint64_t trace_items_ = 0;
    std::vector<Share> wire_;  // shares in flight this cycle
    std::vector<CycleMetrics> metrics_;
    std::vector<FailureOutcome> outcomes_;
    std::vector<NodeTotals> totals_;
};

SimReport run_simulation(const SimConfig& cfg, const std::vector<FlowId>& trace,
                         const FailureScript& script);

// JSON names mirror the struct fields; enums are spelled out ("sweet_spot",
// "rows", "incremental", ...). Unknown keys are rejected.
SimConfig sim_config_from_json(const std::string& text);
std::string sim_config_to_json(const SimConfig& cfg);
FailureScript failure_script_from_json(const std::string& text);
std::string sim_report_to_json(const SimReport& report);
std::string sim_report_to_csv(const SimReport& report);

}  // namespace sketchguard
