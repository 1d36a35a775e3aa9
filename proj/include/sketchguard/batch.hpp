#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sketchguard/common.hpp"
#include "sketchguard/errors.hpp"
#include "sketchguard/sketch.hpp"

namespace sketchguard {

// The five ways a cycle's changes can be recorded before sharing. Values
// double as wire tags (0 is reserved for "none", used by alive and full
// shares).
enum class RepKind : std::uint8_t {
    ItemBuff = 1,
    CntBuff = 2,
    FlwHash = 3,
    CntHash = 4,
    CntDiff = 5,
};

std::string_view rep_name(RepKind kind);
RepKind rep_from_name(std::string_view name);

struct BatchConfig {
    RepKind representation = RepKind::ItemBuff;
    std::uint32_t B = 1;       // most items a cycle may bring
    std::uint32_t B_l = 0;     // per-node cap; 0 means B
    unsigned bits_mid = 64;    // identifier width
    unsigned bits_w = 0;       // column index width; 0 derives from w
    unsigned bits_B = 0;       // batch count width; 0 derives from B
    unsigned bits_N = 32;      // full counter width
    double alpha = 0.8;        // hash-table load threshold
    double beta_hat = 1.0;     // estimated items per flow

    std::uint32_t local_cap() const { return B_l ? B_l : B; }

    // Estimated distinct flows per batch and the table capacity that gives.
    std::uint64_t b_hat() const {
        return static_cast<std::uint64_t>(std::ceil(static_cast<double>(B) / beta_hat));
    }
    std::uint64_t table_capacity() const {
        return static_cast<std::uint64_t>(std::ceil(static_cast<double>(b_hat()) / alpha));
    }

    bool operator==(const BatchConfig&) const = default;
};

// Fills the derived widths (bits_B from B, bits_w from w) and rejects
// anything inconsistent: bits_B must equal bit_width(B), bits_w must hold a
// 1-based column index, alpha in (0,1], beta_hat >= 1, 1 <= B_l <= B.
BatchConfig validate_batch_config(BatchConfig cfg, unsigned d, unsigned w);

// One pending batch. The variant index mirrors RepKind - 1.
struct ItemBuffRep {
    std::vector<FlowId> items;  // arrival order, duplicates kept
};
struct CntBuffRep {
    // d x B_l, 0-based column indices; only the first b_prime columns count.
    Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> idx;
};
struct FlwHashRep {
    std::map<FlowId, std::uint64_t> freq;  // ordered: wire bytes must not
                                           // depend on table iteration order
};
struct CntHashRep {
    std::vector<std::map<std::uint32_t, std::uint64_t>> tables;  // one per row
};
struct CntDiffRep {
    CountMatrix diff;  // d x w
};

struct Batch {
    std::uint32_t b_prime = 0;
    std::variant<ItemBuffRep, CntBuffRep, FlwHashRep, CntHashRep, CntDiffRep> rep;

    RepKind kind() const { return static_cast<RepKind>(rep.index() + 1); }

    // Distinct flows for item-based kinds, filled entries otherwise.
    std::uint64_t distinct_entries() const;
    // Modified counters: sum of table sizes (CntHash), nonzero cells
    // (CntDiff), d * b_prime for CntBuff, 0 for the item kinds.
    std::uint64_t modified_counters() const;
};

Batch make_batch(const BatchConfig& cfg, unsigned d, unsigned w);

// A flush that happened inside smart_update: either the batch filled to the
// local cap, or a hash-table insert would have exceeded its capacity, in
// which case the batch was flushed first and the new item recorded into the
// fresh one (overflow == true).
struct FlushEvent {
    Batch batch;
    bool overflow = false;
};

// A data node's sketch plus the pending batch. The sketch counters advance
// only at flush time; queries in between combine both parts.
class SmartCms {
public:
    SmartCms() = default;
    SmartCms(const SketchParams& params, const BatchConfig& cfg);

    // Records x. Returns the flushed batch when this update triggered one.
    std::optional<FlushEvent> smart_update(const FlowId& x);

    // Sketch estimate plus the in-batch contribution. Exact batch counts for
    // the item kinds; min over rows of (counter + pending delta) jointly for
    // the counter kinds.
    std::uint64_t smart_query(const FlowId& x) const;

    // Cycle boundary: merge the pending batch into the sketch and hand it
    // back (empty batch means the caller sends an alive message).
    Batch flush();

    std::uint32_t pending_items() const { return batch_.b_prime; }
    const Batch& batch() const { return batch_; }
    const Sketch& sketch() const { return sketch_; }
    Sketch& sketch() { return sketch_; }
    const BatchConfig& config() const { return cfg_; }

private:
    void apply_batch();

    Sketch sketch_;
    BatchConfig cfg_;
    Batch batch_;
};

// Recording primitives, exposed so tests and the codec can build batches
// directly. record() does not enforce capacity; SmartCms does.
void record(Batch& batch, const FlowId& x, const HashFamily& hash);
bool would_overflow(const Batch& batch, const FlowId& x, const HashFamily& hash,
                    const BatchConfig& cfg);

// The d x w counter delta this batch applies at flush time. Item kinds are
// replayed through the hash family; counter kinds are expanded in place.
CountMatrix batch_delta(const Batch& batch, const HashFamily& hash, unsigned d, unsigned w);

}  // namespace sketchguard
