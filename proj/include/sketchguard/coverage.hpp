#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "sketchguard/rational.hpp"
#include "sketchguard/redundancy.hpp"

namespace sketchguard {

// Which node backs up which partition of which other node, with what
// coefficient. Clique, ImbalancedSpace and SweetSpot are the partition-level
// mappings; Dedicated and Distributed wrap a generation matrix in the same
// shape so share routing is uniform.
enum class MappingKind : std::uint8_t {
    Clique = 0,
    ImbalancedSpace = 1,
    SweetSpot = 2,
    Dedicated = 3,
    Distributed = 4,
};

// One stored sum: `holder` keeps, for partition `partition` (1-based), the sum
// of coeff * data over `terms`.
struct CoverageBlock {
    unsigned holder = 0;
    unsigned partition = 1;
    std::vector<std::pair<unsigned, std::int64_t>> terms;
};

struct CoverageMapping {
    MappingKind kind = MappingKind::SweetSpot;
    unsigned k = 0;          // data nodes
    unsigned f = 1;          // guaranteed covers per (node, partition)
    unsigned p = 1;          // partitions the mapping is defined over
    unsigned holders = 0;    // total nodes that store blocks (includes data nodes
                             // for the ring mappings, extra nodes for Dedicated)
    std::vector<CoverageBlock> blocks;

    std::vector<const CoverageBlock*> covers(unsigned node, unsigned partition) const;
    std::vector<const CoverageBlock*> held_by(unsigned node) const;
    // Distinct nodes a data node must ship its updates to (self excluded).
    std::vector<unsigned> covering_nodes(unsigned node) const;
    unsigned node_count() const { return std::max(k, holders); }
};

CoverageMapping build_coverage(MappingKind kind, unsigned k, unsigned f = 1);
CoverageMapping coverage_from_generation(const GenerationMatrix& g, unsigned p);

struct MappingStats {
    Rational space;            // stored blocks / p, in sketch-equivalents
    Rational recovery_mean;    // fetched partitions / p, averaged over nodes
    Rational recovery_min;
    Rational recovery_max;
    std::vector<unsigned> r_c; // distinct destinations per data node
};

MappingStats mapping_stats(const CoverageMapping& m);

// Per-partition recovery for the f=1 mappings. Steps are ordered: an Exact
// step may subtract values recovered by earlier steps.
struct PartitionRecoveryStep {
    unsigned node = 0;
    unsigned partition = 1;
    RecoveryStatus status = RecoveryStatus::Exact;
    unsigned block_holder = 0;                              // block read
    unsigned block_partition = 1;
    std::int64_t divisor = 1;                               // own coefficient
    std::vector<std::pair<unsigned, std::int64_t>> subtract;  // peeled-off terms
};

struct MappingRecoveryPlan {
    RecoveryStatus status = RecoveryStatus::Exact;
    std::vector<PartitionRecoveryStep> steps;
    std::vector<unsigned> unrecoverable;  // failed nodes with an uncoverable partition
};

MappingRecoveryPlan mapping_recovery_plan(const CoverageMapping& m,
                                          const std::set<unsigned>& failed_nodes);

}  // namespace sketchguard
