#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sketchguard/common.hpp"
#include "sketchguard/rational.hpp"
#include "sketchguard/sketch.hpp"

namespace sketchguard {

// Frequency-per-flow statistics of a stream cut into size-B batches: for
// batch i with B_i items over b_i distinct flows, beta_i = B_i / b_i. The
// trailing partial batch keeps its beta in the per-batch vectors but stays
// out of beta_avg and the percentiles, which summarize full batches only
// (unless the stream is shorter than one batch, in which case the partial
// batch is all there is and is summarized as-is).
//
// Percentiles are nearest-rank over the sorted per-batch values: level p maps
// to the ceil(p/100 * count)-th smallest. Hard bounds: 1 <= beta_i <= B_i per
// batch, and a batch spanning the whole stream has beta == N/n exactly;
// individual batches of a skewed stream can exceed N/n.
struct BetaStats {
    std::string trace_label;
    std::uint64_t B = 0;
    std::uint64_t total_items = 0;     // N
    std::uint64_t distinct_flows = 0;  // n, over the whole stream
    std::size_t full_batches = 0;

    std::vector<std::uint64_t> batch_sizes;     // B_i
    std::vector<std::uint64_t> batch_distinct;  // b_i
    std::vector<double> batch_beta;             // B_i / b_i

    static constexpr std::array<unsigned, 5> kLevels{5, 25, 50, 75, 95};
    std::array<double, 5> percentiles{};
    double beta_avg = 0.0;

    double percentile(unsigned level) const;  // one of kLevels
};

BetaStats beta_stats(const std::vector<FlowId>& trace, std::uint64_t B,
                     std::string label = "");

// Exact entry-length ratios. theta_ratio compares an identifier-frequency
// pair against a bare identifier; theta_prime_ratio compares an
// index-frequency pair against a bare index.
Rational theta_ratio(unsigned bits_mid, unsigned bits_B);
Rational theta_prime_ratio(unsigned bits_w, unsigned bits_B);

enum class TableChoice {
    StdTable,  // small batches: plain table, capacity preallocated at 2B
    ItemBuff,  // buffer of items
    FlwHash,   // compact hash table sized by a beta percentile
};

const char* table_choice_name(TableChoice choice);

struct Recommendation {
    TableChoice choice = TableChoice::ItemBuff;
    double beta_hat = 0.0;     // FlwHash: the chosen percentile's value
    unsigned percentile = 0;   // FlwHash: the chosen level
    double early_share = 0.0;  // FlwHash: expected fraction of early batches
    std::uint64_t capacity = 0;  // StdTable: slots to preallocate
    std::string reason;
};

// Pick a batch representation for the measured stream. A compact hash table
// wants the lowest percentile whose value beta_p is traffic-efficient
// (theta <= beta_p <= beta_avg) and space-efficient (beta_p > theta / alpha);
// sending early on up to p percent of batches is the price. Streams with
// beta_avg below theta keep a buffer of items, and batches of at most 100
// items stay on a standard table with twice the batch size preallocated.
Recommendation recommend_representation(const BetaStats& stats, const Rational& theta,
                                        double alpha);

// Estimation error around a single emulated node failure. The stream is cut
// into size-B batches; the failure hits batch t = floor(fail_at * batches)
// after floor(point * B_t) of its items. The backup estimator is the sketch
// state at the start of batch t, the non-failed estimator has everything up
// to the failure instant, and truth is an exact frequency map. Every flow
// seen before the failure contributes one relative error per estimator pair;
// fields hold the means.
struct MreReport {
    std::string trace_label;
    std::uint64_t B = 0;
    double fail_at = 0.0;
    double point = 0.0;
    std::uint64_t failed_batch = 0;  // t
    std::uint64_t lost_items = 0;
    std::uint64_t flows = 0;  // flows examined

    double mre_plus_truth = 0.0;        // backup + B vs true count
    double mre_backup_truth = 0.0;      // backup vs true count
    double mre_plus_nonfailed = 0.0;    // backup + B vs non-failed estimate
    double mre_backup_nonfailed = 0.0;  // backup vs non-failed estimate

    bool one_sided = false;           // backup + B >= true count for every flow
    double backup_overestimates = 0;  // share of flows with backup >= true count
};

MreReport mre_experiment(const std::vector<FlowId>& trace, std::uint64_t B,
                         const SketchParams& params, double fail_at, double point,
                         std::string label = "");

// CSV forms for plotting. beta: one `batch` row per batch, then one `summary`
// row carrying the aggregates. mre: one row per report.
std::string beta_stats_to_csv(const BetaStats& stats);
std::string mre_to_csv(const std::vector<MreReport>& reports);

}  // namespace sketchguard
