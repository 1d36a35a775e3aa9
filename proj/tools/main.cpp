// Command-line front end: trace generation, matrix inspection, simulation
// runs, and the measurement experiments. Every run that writes an output file
// also writes a <output>.manifest.json recording the effective configuration,
// seed, and binary version, so a run can be reproduced from its manifest.
//
// Exit codes: 0 success, 1 domain failure (unrecoverable loss, overflow),
// 2 usage or I/O errors.
//
// Seed precedence: an explicit --seed flag, then the config file (simulate),
// then the SKETCHGUARD_SEED environment variable, then 1.

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sketchguard/analysis.hpp"
#include "sketchguard/errors.hpp"
#include "sketchguard/redundancy.hpp"
#include "sketchguard/simnet.hpp"
#include "sketchguard/trace.hpp"
#include "sketchguard/version.hpp"

namespace {

using nlohmann::json;
using namespace sketchguard;

std::uint64_t env_seed(std::uint64_t fallback) {
    const char* v = std::getenv("SKETCHGUARD_SEED");
    if (v == nullptr || *v == '\0') return fallback;
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw param_error("SKETCHGUARD_SEED is not a number");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw io_error("write to '" + path + "' failed");
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Stopwatch {
  public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_manifest(const std::string& command, const json& config, std::uint64_t seed,
                    const std::vector<std::string>& outputs, double ms) {
    if (outputs.empty()) return;
    json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["git_describe"] = kVersion;
    m["outputs"] = outputs;
    m["duration_ms"] = ms;
    m["generated_utc"] = utc_now();
    write_file(outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

int cmd_gen_trace(std::uint64_t flows, std::uint64_t items, double s, std::uint64_t seed,
                  unsigned bits, const std::string& out) {
    Stopwatch timer;
    const Trace trace = zipf_trace(flows, items, s, seed, static_cast<std::uint16_t>(bits));
    save_trace(out, trace);
    std::cout << "wrote " << trace.items.size() << " items over up to " << flows
              << " flows to " << out << "\n";
    write_manifest("gen-trace",
                   json{{"flows", flows}, {"items", items}, {"zipf", s}, {"bits", bits}},
                   seed, {out}, timer.ms());
    return 0;
}

int cmd_matrix(unsigned k, unsigned f, bool pascal, bool check) {
    const IntMatrix m = pascal ? pascal_generate(k) : mr_generate(k, f);
    const unsigned red_rows = static_cast<unsigned>(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            std::cout << (c ? " " : "") << m(r, c);
        std::cout << "\n";
    }
    if (check) {
        const bool ok = spans_check(m, red_rows);
        std::cout << "spans: " << (ok ? "ok" : "DEGENERATE") << "\n";
        std::cout << "minor determinants:";
        for (const BigInt& d : minor_determinants(m, red_rows)) std::cout << " " << d;
        std::cout << "\n";
        if (!ok) return 1;
    }
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& trace_path,
                 const std::string& failures_path, const std::string& out,
                 const std::string& csv, bool allow_loss, bool has_cycles,
                 std::uint32_t cycles, bool has_seed, std::uint64_t seed, bool has_policy,
                 const std::string& policy) {
    Stopwatch timer;
    json j = json::parse(read_file(config_path), nullptr, false);
    if (j.is_discarded()) throw io_error("config '" + config_path + "' is not valid JSON");
    if (has_cycles) j["cycles"] = cycles;
    if (has_policy) j["policy"] = policy;
    if (has_seed)
        j["seed"] = seed;
    else if (!j.contains("seed"))
        j["seed"] = env_seed(1);
    const SimConfig cfg = sim_config_from_json(j.dump());

    const Trace trace = load_trace(trace_path);
    if (trace.bits_mid != cfg.batch.bits_mid)
        throw param_error("trace is " + std::to_string(trace.bits_mid) +
                          " bits wide, config expects " + std::to_string(cfg.batch.bits_mid));
    FailureScript script;
    if (!failures_path.empty()) script = failure_script_from_json(read_file(failures_path));

    const SimReport report = run_simulation(cfg, trace.items, script);

    unsigned exact = 0, semi = 0, unrecoverable = 0;
    for (const FailureOutcome& o : report.failures) {
        if (o.status == RecoveryStatus::Exact) ++exact;
        if (o.status == RecoveryStatus::Semi) ++semi;
        if (o.status == RecoveryStatus::Unrecoverable) ++unrecoverable;
    }
    std::cout << "cycles: " << report.cycles.size() << "  items: " << report.trace_items
              << "  leftover: " << report.leftover_items << "\n";
    std::cout << "failures: " << report.failures.size() << " (exact " << exact << ", semi "
              << semi << ", unrecoverable " << unrecoverable
              << ")  lost nodes: " << report.lost_nodes << "\n";
    char digest[24];
    std::snprintf(digest, sizeof digest, "0x%016llx",
                  static_cast<unsigned long long>(report.digest));
    std::cout << "report digest: " << digest << "\n";

    std::vector<std::string> outputs;
    if (!out.empty()) {
        write_file(out, sim_report_to_json(report));
        outputs.push_back(out);
    }
    if (!csv.empty()) {
        write_file(csv, sim_report_to_csv(report));
        outputs.push_back(csv);
    }
    write_manifest("simulate",
                   json{{"config", json::parse(sim_config_to_json(cfg))},
                        {"trace", trace_path},
                        {"failures", failures_path}},
                   cfg.seed, outputs, timer.ms());
    if (report.lost_nodes > 0 && !allow_loss) {
        std::cerr << "unrecoverable loss (" << report.lost_nodes
                  << " nodes); pass --allow-loss to exit 0\n";
        return 1;
    }
    return 0;
}

int cmd_beta(const std::string& trace_path, const std::vector<std::uint64_t>& batch_sizes,
             double alpha, unsigned bits_mid, unsigned bits_B, const std::string& out) {
    Stopwatch timer;
    const Trace trace = load_trace(trace_path);
    std::string csv;
    for (std::uint64_t B : batch_sizes) {
        const BetaStats stats = beta_stats(trace.items, B, trace_path);
        const unsigned fb = bits_B ? bits_B : static_cast<unsigned>(std::bit_width(B));
        const Rational theta = theta_ratio(bits_mid, fb);
        const Recommendation rec = recommend_representation(stats, theta, alpha);
        std::cout << "B=" << B << "  beta_avg=" << stats.beta_avg
                  << "  beta_5%=" << stats.percentile(5)
                  << "  theta=" << static_cast<double>(theta) << "  -> "
                  << table_choice_name(rec.choice);
        if (rec.choice == TableChoice::FlwHash)
            std::cout << " (beta_hat=" << rec.beta_hat << ", percentile=" << rec.percentile
                      << ")";
        if (rec.choice == TableChoice::StdTable)
            std::cout << " (capacity=" << rec.capacity << ")";
        std::cout << "\n    " << rec.reason << "\n";
        std::string block = beta_stats_to_csv(stats);
        if (!csv.empty()) block.erase(0, block.find('\n') + 1);  // one header per file
        csv += block;
    }
    std::vector<std::string> outputs;
    if (!out.empty()) {
        write_file(out, csv);
        outputs.push_back(out);
    }
    write_manifest("beta",
                   json{{"trace", trace_path},
                        {"B", batch_sizes},
                        {"alpha", alpha},
                        {"bits_mid", bits_mid},
                        {"bits_B", bits_B}},
                   0, outputs, timer.ms());
    return 0;
}

int cmd_mre(const std::string& trace_path, const std::vector<std::uint64_t>& batch_sizes,
            const std::vector<double>& fail_ats, const std::vector<double>& points,
            double epsilon, double delta, std::uint64_t seed, const std::string& out) {
    Stopwatch timer;
    const Trace trace = load_trace(trace_path);
    const SketchParams params = make_params(epsilon, delta, seed);
    std::vector<MreReport> reports;
    for (std::uint64_t B : batch_sizes)
        for (double fail_at : fail_ats)
            for (double point : points)
                reports.push_back(
                    mre_experiment(trace.items, B, params, fail_at, point, trace_path));
    for (const MreReport& r : reports)
        std::cout << "B=" << r.B << " fail_at=" << r.fail_at << " point=" << r.point
                  << "  mre(backup vs truth)=" << r.mre_backup_truth
                  << "  mre(+B vs truth)=" << r.mre_plus_truth
                  << "  one_sided=" << (r.one_sided ? "yes" : "no") << "\n";
    std::vector<std::string> outputs;
    if (!out.empty()) {
        write_file(out, mre_to_csv(reports));
        outputs.push_back(out);
    }
    write_manifest("mre",
                   json{{"trace", trace_path},
                        {"B", batch_sizes},
                        {"fail_at", fail_ats},
                        {"point", points},
                        {"epsilon", epsilon},
                        {"delta", delta}},
                   seed, outputs, timer.ms());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recoverable count-min sketches: traces, matrices, simulation, experiments"};
    app.require_subcommand(1);

    // gen-trace
    auto* gen = app.add_subcommand("gen-trace", "Generate a seeded Zipf identifier trace");
    std::uint64_t flows = 1000, items = 100000, seed = 0;
    double zipf_s = 1.0;
    unsigned bits = 64;
    std::string out_path;
    gen->add_option("--flows", flows, "Flow alphabet size")->check(CLI::PositiveNumber);
    gen->add_option("--items", items, "Items to emit")->check(CLI::PositiveNumber);
    gen->add_option("--zipf", zipf_s, "Zipf exponent (0 = uniform)");
    auto* gen_seed = gen->add_option("--seed", seed, "Generator seed");
    gen->add_option("--bits", bits, "Identifier width in bits");
    gen->add_option("--out", out_path, "Output trace file")->required();

    // matrix
    auto* mat = app.add_subcommand("matrix", "Print a generation matrix and check its spans");
    unsigned mk = 4, mf = 1;
    bool pascal = false, check = false;
    mat->add_option("--k", mk, "Data nodes")->required()->check(CLI::PositiveNumber);
    auto* mat_f = mat->add_option("--f", mf, "Redundant rows");
    mat->add_flag("--pascal", pascal, "Use the Pascal alternative (square, f = k)");
    mat->add_flag("--check", check, "Verify all f x f minors are invertible");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run the cycle simulator on a trace");
    std::string cfg_path, trace_path, failures_path, report_path, csv_path, policy;
    bool allow_loss = false;
    std::uint32_t cycles = 0;
    std::uint64_t sim_seed = 0;
    sim->add_option("--config", cfg_path, "Simulation config JSON")->required();
    sim->add_option("--trace", trace_path, "Identifier trace file")->required();
    sim->add_option("--failures", failures_path, "Failure script JSON");
    sim->add_option("--out", report_path, "Report JSON output");
    sim->add_option("--csv", csv_path, "Per-cycle metrics CSV output");
    sim->add_flag("--allow-loss", allow_loss, "Exit 0 even when nodes are lost");
    auto* sim_cycles = sim->add_option("--cycles", cycles, "Override config cycle count");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "Override config seed");
    auto* sim_policy = sim->add_option("--policy", policy, "Override config policy")
                           ->check(CLI::IsMember({"full", "incremental"}));

    // beta
    auto* beta = app.add_subcommand("beta", "Frequency-per-flow statistics and table advice");
    std::string beta_trace, beta_out;
    std::vector<std::uint64_t> beta_B{1000};
    double alpha = 0.8;
    unsigned bits_mid = 64, bits_B = 0;
    beta->add_option("--trace", beta_trace, "Identifier trace file")->required();
    beta->add_option("--B", beta_B, "Batch sizes (comma separated)")->delimiter(',');
    beta->add_option("--alpha", alpha, "Hash table load threshold");
    beta->add_option("--bits-mid", bits_mid, "Identifier width for theta");
    beta->add_option("--bits-B", bits_B, "Frequency width for theta (0 = derive from B)");
    beta->add_option("--out", beta_out, "CSV output");

    // mre
    auto* mre = app.add_subcommand("mre", "Estimation error around an emulated failure");
    std::string mre_trace, mre_out;
    std::vector<std::uint64_t> mre_B{500};
    std::vector<double> fail_ats{0.5}, points{0.5};
    double epsilon = 0.01, delta = 0.01;
    std::uint64_t mre_seed = 0;
    mre->add_option("--trace", mre_trace, "Identifier trace file")->required();
    mre->add_option("--B", mre_B, "Batch sizes (comma separated)")->delimiter(',');
    mre->add_option("--fail-at", fail_ats, "Failure positions in (0,1)")->delimiter(',');
    mre->add_option("--point", points, "Intra-batch failure points in [0,1]")->delimiter(',');
    mre->add_option("--epsilon", epsilon, "Sketch epsilon");
    mre->add_option("--delta", delta, "Sketch delta");
    auto* mre_seed_opt = mre->add_option("--seed", mre_seed, "Sketch hash seed");
    mre->add_option("--out", mre_out, "CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_trace(flows, items, zipf_s,
                                 gen_seed->count() ? seed : env_seed(1), bits, out_path);
        if (mat->parsed())
            return cmd_matrix(mk, mat_f->count() ? mf : (pascal ? mk : 1), pascal, check);
        if (sim->parsed())
            return cmd_simulate(cfg_path, trace_path, failures_path, report_path, csv_path,
                                allow_loss, sim_cycles->count() > 0, cycles,
                                sim_seed_opt->count() > 0, sim_seed, sim_policy->count() > 0,
                                policy);
        if (beta->parsed())
            return cmd_beta(beta_trace, beta_B, alpha, bits_mid, bits_B, beta_out);
        if (mre->parsed())
            return cmd_mre(mre_trace, mre_B, fail_ats, points, epsilon, delta,
                           mre_seed_opt->count() ? mre_seed : env_seed(1), mre_out);
    } catch (const param_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
