#pragma once

#include <cstdint>
#include <vector>

#include "sketchguard/batch.hpp"
#include "sketchguard/coverage.hpp"
#include "sketchguard/partition.hpp"

namespace sketchguard {

// Closed-form per-flush costs of a representation under a mapping and
// partition scheme. traffic_bits and header_bits use the wire's byte-rounded
// field widths plus the u32 row prefixes of variable-length payloads, so an
// instrumented run matches them exactly; extra_space_bits and the break-even
// helpers below use the raw configured widths, which is what the efficiency
// comparisons are stated in.
struct CostEstimate {
    std::uint64_t extra_space_bits = 0;  // local structure capacity
    std::uint64_t traffic_bits = 0;      // payload bits, all shares of one flush
    std::uint64_t header_bits = 0;       // share headers, reported separately
    std::uint64_t shares = 0;
    std::uint64_t local_ops = 0;         // extra hash-table operations at the sender
    std::uint64_t remote_ops = 0;        // hash recomputations at the receivers
    std::uint64_t membership_tests = 0;

    bool operator==(const CostEstimate&) const = default;
};

// Observed batch quantities the closed forms need. elems_per_partition is
// only consulted by the variable-length counter encodings when the scheme
// has more than one partition (entries routed to each 1-based partition;
// its sum must equal d*b_prime for CntBuff and c otherwise).
struct CostInputs {
    std::uint32_t b_prime = 0;  // filled entries at share time
    std::uint64_t b = 0;        // distinct flows (FlwHash entries)
    std::uint64_t c = 0;        // modified counters (CntHash table entries, CntDiff nonzeros)
    std::vector<std::uint64_t> elems_per_partition;
};

// Counter elements of a pending batch routed per 1-based partition, the
// elems_per_partition input above. Empty for the item kinds.
std::vector<std::uint64_t> elements_per_partition(const Batch& batch,
                                                  const PartitionScheme& scheme, unsigned d,
                                                  unsigned w);

CostEstimate cost_model(RepKind rep, const CoverageMapping& mapping, unsigned sender,
                        const PartitionScheme& scheme, unsigned d, unsigned w,
                        const BatchConfig& cfg, const CostInputs& in);

CostEstimate full_share_cost(const CoverageMapping& mapping, unsigned sender,
                             const PartitionScheme& scheme, unsigned d, unsigned w,
                             const BatchConfig& cfg);

// Entry-length ratios the representation comparisons revolve around:
// theta for identifier-frequency pairs, theta_prime for index-change pairs.
inline double theta(unsigned bits_mid, unsigned bits_B) {
    return 1.0 + static_cast<double>(bits_B) / bits_mid;
}
inline double theta_prime(unsigned bits_w, unsigned bits_B) {
    return 1.0 + static_cast<double>(bits_B) / bits_w;
}

// Batch size at which a full share stops losing to a buffer of counters:
// f*d*w*bits_N <= f*B*d*bits_w once B >= w * bits_N / bits_w.
inline double full_share_break_even_cnt_buff(unsigned w, unsigned bits_N, unsigned bits_w) {
    return static_cast<double>(w) * bits_N / bits_w;
}

// Largest batch size at which a buffer of items still beats a full share:
// r_c*B*bits_mid <= f*d*w*bits_N once B <= d*w*(f/r_c)*(bits_N/bits_mid).
inline double item_buff_break_even_full_share(unsigned d, unsigned w, unsigned f, unsigned r_c,
                                              unsigned bits_N, unsigned bits_mid) {
    return static_cast<double>(d) * w * f * bits_N / (static_cast<double>(r_c) * bits_mid);
}

// A buffer of counters out-packs a buffer of items only for identifiers at
// least as long as all d recorded indices together, which is rare.
inline bool cnt_buff_beats_item_buff(unsigned bits_mid, unsigned d, unsigned bits_w) {
    return bits_mid >= static_cast<std::uint64_t>(d) * bits_w;
}

}  // namespace sketchguard
