#include "sketchguard/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include "sketchguard/errors.hpp"

namespace sketchguard {

namespace {

double nearest_rank(const std::vector<double>& sorted, unsigned level) {
    const std::size_t rank = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::ceil(static_cast<double>(level) * static_cast<double>(sorted.size()) / 100.0)));
    return sorted[std::min(rank, sorted.size()) - 1];
}

}  // namespace

double BetaStats::percentile(unsigned level) const {
    for (std::size_t i = 0; i < kLevels.size(); ++i)
        if (kLevels[i] == level) return percentiles[i];
    throw param_error("percentile: level " + std::to_string(level) + " is not tracked");
}

BetaStats beta_stats(const std::vector<FlowId>& trace, std::uint64_t B, std::string label) {
    if (trace.empty()) throw param_error("beta_stats: empty trace");
    if (B == 0) throw param_error("beta_stats: batch size must be positive");

    BetaStats stats;
    stats.trace_label = std::move(label);
    stats.B = B;
    stats.total_items = trace.size();

    std::unordered_set<FlowId, FlowIdHash> stream_flows;
    std::unordered_set<FlowId, FlowIdHash> batch_flows;
    std::uint64_t in_batch = 0;
    const auto close_batch = [&] {
        stats.batch_sizes.push_back(in_batch);
        stats.batch_distinct.push_back(batch_flows.size());
        stats.batch_beta.push_back(static_cast<double>(in_batch) /
                                   static_cast<double>(batch_flows.size()));
        if (in_batch == B) ++stats.full_batches;
        batch_flows.clear();
        in_batch = 0;
    };
    for (const FlowId& id : trace) {
        stream_flows.insert(id);
        batch_flows.insert(id);
        if (++in_batch == B) close_batch();
    }
    if (in_batch > 0) close_batch();
    stats.distinct_flows = stream_flows.size();

    // Full batches carry the summary; a stream shorter than one batch has
    // only its partial tail to offer.
    std::vector<double> sample(stats.batch_beta.begin(),
                               stats.batch_beta.begin() +
                                   static_cast<std::ptrdiff_t>(stats.full_batches));
    if (sample.empty()) sample = stats.batch_beta;
    double sum = 0.0;
    for (double b : sample) sum += b;
    stats.beta_avg = sum / static_cast<double>(sample.size());
    std::sort(sample.begin(), sample.end());
    for (std::size_t i = 0; i < BetaStats::kLevels.size(); ++i)
        stats.percentiles[i] = nearest_rank(sample, BetaStats::kLevels[i]);
    return stats;
}

Rational theta_ratio(unsigned bits_mid, unsigned bits_B) {
    if (bits_mid == 0 || bits_B == 0) throw param_error("theta_ratio: widths must be positive");
    return Rational(bits_mid + bits_B, bits_mid);
}

Rational theta_prime_ratio(unsigned bits_w, unsigned bits_B) {
    if (bits_w == 0 || bits_B == 0)
        throw param_error("theta_prime_ratio: widths must be positive");
    return Rational(bits_w + bits_B, bits_w);
}

const char* table_choice_name(TableChoice choice) {
    switch (choice) {
        case TableChoice::StdTable: return "std_table";
        case TableChoice::ItemBuff: return "item_buff";
        case TableChoice::FlwHash: return "flw_hash";
    }
    throw param_error("table_choice_name: unknown choice");
}

Recommendation recommend_representation(const BetaStats& stats, const Rational& theta,
                                        double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw param_error("recommend_representation: alpha must be in (0, 1]");
    if (theta < 1) throw param_error("recommend_representation: theta below 1");

    Recommendation rec;
    if (stats.B <= 100) {
        rec.choice = TableChoice::StdTable;
        rec.capacity = 2 * stats.B;
        rec.reason = "beta is noisy for batches of at most 100 items; preallocate a plain "
                     "table at twice the batch size";
        return rec;
    }
    const double theta_d = static_cast<double>(theta);
    if (stats.beta_avg < theta_d) {
        rec.choice = TableChoice::ItemBuff;
        rec.reason = "average frequency-per-flow is below theta, so a buffer of items "
                     "produces less traffic than any hash table";
        return rec;
    }
    // Lowest percentile that is both traffic-efficient and space-efficient.
    const double space_floor = theta_d / alpha;
    for (std::size_t i = 0; i < BetaStats::kLevels.size(); ++i) {
        const double beta_p = stats.percentiles[i];
        const bool traffic = beta_p >= theta_d && beta_p <= stats.beta_avg;
        const bool space = beta_p > space_floor;
        if (traffic && space) {
            rec.choice = TableChoice::FlwHash;
            rec.beta_hat = beta_p;
            rec.percentile = BetaStats::kLevels[i];
            rec.early_share = static_cast<double>(BetaStats::kLevels[i]) / 100.0;
            rec.reason = "lowest percentile that beats theta on traffic and theta/alpha "
                         "on space";
            return rec;
        }
    }
    rec.choice = TableChoice::ItemBuff;
    rec.reason = "no tracked percentile is both traffic- and space-efficient";
    return rec;
}

MreReport mre_experiment(const std::vector<FlowId>& trace, std::uint64_t B,
                         const SketchParams& params, double fail_at, double point,
                         std::string label) {
    if (B == 0) throw param_error("mre_experiment: batch size must be positive");
    if (trace.size() < B) throw param_error("mre_experiment: trace shorter than one batch");
    if (!(fail_at > 0.0) || !(fail_at < 1.0))
        throw param_error("mre_experiment: fail_at must be in (0, 1)");
    if (!(point >= 0.0) || !(point <= 1.0))
        throw param_error("mre_experiment: point must be in [0, 1]");

    const std::uint64_t batches = trace.size() / B;
    const std::uint64_t t = static_cast<std::uint64_t>(
        std::floor(fail_at * static_cast<double>(batches)));
    const std::uint64_t lost =
        static_cast<std::uint64_t>(std::floor(point * static_cast<double>(B)));
    const std::uint64_t seen = t * B + lost;

    Sketch live(params);
    std::map<FlowId, std::uint64_t> truth;
    for (std::uint64_t i = 0; i < t * B; ++i) {
        live.update(trace[i]);
        ++truth[trace[i]];
    }
    const Sketch backup = live;
    for (std::uint64_t i = t * B; i < seen; ++i) {
        live.update(trace[i]);
        ++truth[trace[i]];
    }

    MreReport rep;
    rep.trace_label = std::move(label);
    rep.B = B;
    rep.fail_at = fail_at;
    rep.point = point;
    rep.failed_batch = t;
    rep.lost_items = lost;
    rep.flows = truth.size();
    rep.one_sided = true;
    if (truth.empty()) return rep;  // failure at the very start of the stream

    double plus_truth = 0.0, backup_truth = 0.0, plus_nf = 0.0, backup_nf = 0.0;
    std::uint64_t over = 0;
    for (const auto& [id, c_x] : truth) {
        const double truth_d = static_cast<double>(c_x);
        const double est_nf = static_cast<double>(live.query(id));
        const double est_backup = static_cast<double>(backup.query(id));
        const double est_plus = est_backup + static_cast<double>(B);
        plus_truth += std::abs(est_plus - truth_d) / truth_d;
        backup_truth += std::abs(est_backup - truth_d) / truth_d;
        plus_nf += std::abs(est_plus - est_nf) / est_nf;
        backup_nf += std::abs(est_backup - est_nf) / est_nf;
        if (est_plus < truth_d) rep.one_sided = false;
        if (est_backup >= truth_d) ++over;
    }
    const double n = static_cast<double>(truth.size());
    rep.mre_plus_truth = plus_truth / n;
    rep.mre_backup_truth = backup_truth / n;
    rep.mre_plus_nonfailed = plus_nf / n;
    rep.mre_backup_nonfailed = backup_nf / n;
    rep.backup_overestimates = static_cast<double>(over) / n;
    return rep;
}

namespace {

void csv_double(std::ostringstream& out, double v) {
    out.precision(17);
    out << v;
}

}  // namespace

std::string beta_stats_to_csv(const BetaStats& stats) {
    std::ostringstream out;
    out << "kind,trace,B,batch,size,distinct,beta,beta_avg,beta_p5,beta_p25,beta_p50,"
           "beta_p75,beta_p95,total_items,distinct_flows\n";
    for (std::size_t i = 0; i < stats.batch_beta.size(); ++i) {
        out << "batch," << stats.trace_label << ',' << stats.B << ',' << i << ','
            << stats.batch_sizes[i] << ',' << stats.batch_distinct[i] << ',';
        csv_double(out, stats.batch_beta[i]);
        out << ",,,,,,,,\n";
    }
    out << "summary," << stats.trace_label << ',' << stats.B << ",,,,,";
    csv_double(out, stats.beta_avg);
    for (double p : stats.percentiles) {
        out << ',';
        csv_double(out, p);
    }
    out << ',' << stats.total_items << ',' << stats.distinct_flows << "\n";
    return out.str();
}

std::string mre_to_csv(const std::vector<MreReport>& reports) {
    std::ostringstream out;
    out << "trace,B,fail_at,point,failed_batch,lost_items,flows,mre_plus_truth,"
           "mre_backup_truth,mre_plus_nonfailed,mre_backup_nonfailed,one_sided,"
           "backup_overestimates\n";
    for (const MreReport& r : reports) {
        out << r.trace_label << ',' << r.B << ',';
        csv_double(out, r.fail_at);
        out << ',';
        csv_double(out, r.point);
        out << ',' << r.failed_batch << ',' << r.lost_items << ',' << r.flows << ',';
        csv_double(out, r.mre_plus_truth);
        out << ',';
        csv_double(out, r.mre_backup_truth);
        out << ',';
        csv_double(out, r.mre_plus_nonfailed);
        out << ',';
        csv_double(out, r.mre_backup_nonfailed);
        out << ',' << (r.one_sided ? 1 : 0) << ',';
        csv_double(out, r.backup_overestimates);
        out << "\n";
    }
    return out.str();
}

}  // namespace sketchguard
