// Standalone acceptance gate. `acceptance_tests <n>` runs criterion n alone
// and prints one PASS or FAIL line; with no argument all nine run in order.
// Exit status is nonzero when any requested criterion fails. Expected values
// and tolerances are pinned inline so the gate does not depend on the unit
// suite.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sketchguard/analysis.hpp"
#include "sketchguard/batch.hpp"
#include "sketchguard/coverage.hpp"
#include "sketchguard/partition.hpp"
#include "sketchguard/redundancy.hpp"
#include "sketchguard/simnet.hpp"
#include "sketchguard/sketch.hpp"
#include "sketchguard/trace.hpp"
#include "sketchguard/wire.hpp"

using namespace sketchguard;

namespace {

int g_failed = 0;

void expect(bool ok, const char* what, int line) {
    if (ok) return;
    ++g_failed;
    if (g_failed <= 16) std::fprintf(stderr, "    check failed (line %d): %s\n", line, what);
}

#define EXPECT(cond) expect(static_cast<bool>(cond), #cond, __LINE__)

IntMatrix int_rows(const std::vector<std::vector<std::int64_t>>& rows) {
    IntMatrix m(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

bool int_eq(const IntMatrix& a, const IntMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

RationalMatrix rat_rows(const std::vector<std::vector<Rational>>& rows) {
    RationalMatrix m(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows[0].size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

bool rat_eq(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j)) return false;
    return true;
}

bool rat_row_eq(const RationalMatrix& a, Eigen::Index row, const std::vector<Rational>& want) {
    if (a.cols() != static_cast<Eigen::Index>(want.size())) return false;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (a(row, j) != want[static_cast<std::size_t>(j)]) return false;
    return true;
}

std::vector<SourceRef> refs(const std::vector<std::pair<char, unsigned>>& v) {
    std::vector<SourceRef> out;
    for (auto [kind, idx] : v) out.push_back({kind == 'R', idx});
    return out;
}

// -------------------------------------------------------------------------
// 1. Generation matrices, span checks and minor determinants.

bool criterion1() {
    const IntMatrix mr5 = int_rows({{1, 1, 1, 1, 1},
                                    {1, 2, 3, 4, 5},
                                    {1, 2, 4, 7, 11},
                                    {1, 2, 4, 8, 15},
                                    {1, 2, 4, 8, 16}});
    EXPECT(int_eq(mr_generate(5, 5), mr5));

    const IntMatrix p5 = int_rows({{1, 1, 1, 1, 1},
                                   {1, 2, 3, 4, 5},
                                   {1, 3, 6, 10, 15},
                                   {1, 4, 10, 20, 35},
                                   {1, 5, 15, 35, 70}});
    EXPECT(int_eq(pascal_generate(5), p5));

    for (unsigned k = 1; k <= 6; ++k)
        for (unsigned f = 1; f <= k; ++f) {
            expect(spans_check(mr_generate(k, f), f), "coefficient rows span", __LINE__);
            expect(spans_check(pascal_generate(k).topRows(static_cast<Eigen::Index>(f)), f),
                   "pascal rows span", __LINE__);
        }

    const IntMatrix m = mr_generate(5, 5);
    const std::vector<BigInt> two_expected{1, 2, 3, 4, 1, 2, 3, 1, 2, 1};
    EXPECT(minor_determinants(m, 2) == two_expected);
    const std::vector<BigInt> three_expected{1, 3, 6, 3, 8, 6, 1, 3, 3, 1};
    EXPECT(minor_determinants(m, 3) == three_expected);
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 2. Worked recovery inverses, exact rational equality.

bool criterion2() {
    {
        const auto g = GenerationMatrix::dedicated(5, 3);
        const auto plan = recovery_plan(g, {0, 1, 2});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(plan.sources == refs({{'R', 0}, {'R', 1}, {'R', 2}, {'D', 3}, {'D', 4}}));
        EXPECT(rat_eq(plan.inverse, rat_rows({{2, -2, 1, -1, -3},
                                              {-1, 3, -2, 3, 8},
                                              {0, -1, 1, -3, -6},
                                              {0, 0, 0, 1, 0},
                                              {0, 0, 0, 0, 1}})));
    }
    {
        const auto g = GenerationMatrix::dedicated(5, 5);
        const auto plan = recovery_plan(g, {0, 1, 2, 3, 4});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(plan.sources == refs({{'R', 0}, {'R', 1}, {'R', 2}, {'R', 3}, {'R', 4}}));
        EXPECT(rat_eq(plan.inverse, rat_rows({{2, -2, 2, -2, 1},
                                              {-1, 3, -5, 7, -4},
                                              {0, -1, 4, -9, 6},
                                              {0, 0, -1, 5, -4},
                                              {0, 0, 0, -1, 1}})));
        EXPECT(rat_row_eq(plan.inverse, 4, {0, 0, 0, -1, 1}));
    }
    {
        // Data sketches 0, 2, 4 plus redundant rows 0 and 2 are gone.
        const auto g = GenerationMatrix::dedicated(5, 5);
        const auto plan = recovery_plan(g, {0, 2, 4, 5, 7});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(plan.sources == refs({{'R', 1}, {'D', 1}, {'R', 3}, {'D', 3}, {'R', 4}}));
        EXPECT(rat_eq(plan.inverse, rat_rows({{4, -2, -28, 8, 25},
                                              {0, 1, 0, 0, 0},
                                              {-1, 0, 11, -4, -10},
                                              {0, 0, 0, 1, 0},
                                              {0, 0, -1, 0, 1}})));
    }
    {
        const auto g = GenerationMatrix::distributed(4);

        auto plan = recovery_plan(g, {0});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(plan.sources == refs({{'R', 1}, {'D', 1}, {'D', 2}, {'D', 3}}));
        EXPECT(rat_row_eq(plan.inverse, 0, {1, -2, -4, -8}));

        plan = recovery_plan(g, {1});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_row_eq(plan.inverse, 1,
                          {Rational(-1, 2), Rational(1, 2), -2, Rational(-7, 2)}));

        plan = recovery_plan(g, {2});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_row_eq(plan.inverse, 2,
                          {Rational(-1, 4), Rational(-1, 2), Rational(1, 4), Rational(-7, 4)}));

        plan = recovery_plan(g, {3});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_row_eq(plan.inverse, 3,
                          {Rational(-1, 7), Rational(-2, 7), Rational(-4, 7), Rational(1, 7)}));

        plan = recovery_plan(g, {0, 1});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(plan.sources == refs({{'R', 2}, {'R', 3}, {'D', 2}, {'D', 3}}));
        EXPECT(rat_eq(plan.inverse, rat_rows({{2, -1, 1, 2},
                                              {-1, 1, -2, -3},
                                              {0, 0, 1, 0},
                                              {0, 0, 0, 1}})));

        plan = recovery_plan(g, {0, 2});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_eq(plan.inverse, rat_rows({{-3, -2, 4, 8},
                                              {0, 1, 0, 0},
                                              {1, 0, -1, -4},
                                              {0, 0, 0, 1}})));

        plan = recovery_plan(g, {0, 3});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_eq(plan.inverse,
                      rat_rows({{Rational(-1, 7), Rational(-6, 7), Rational(-4, 7), Rational(8, 7)},
                                {0, 1, 0, 0},
                                {0, 0, 1, 0},
                                {Rational(1, 7), Rational(-1, 7), Rational(-3, 7), Rational(-1, 7)}})));
        // The same first row cleared of denominators.
        for (Eigen::Index j = 0; j < 4; ++j) {
            const Rational scaled = plan.inverse(0, j) * 7;
            const std::int64_t want[] = {-1, -6, -4, 8};
            EXPECT(scaled == want[j]);
        }

        plan = recovery_plan(g, {1, 2});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_eq(plan.inverse,
                      rat_rows({{1, 0, 0, 0},
                                {Rational(-1, 2), Rational(-3, 2), 2, Rational(5, 2)},
                                {0, 1, -1, -3},
                                {0, 0, 0, 1}})));

        plan = recovery_plan(g, {1, 3});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_eq(plan.inverse,
                      rat_rows({{1, 0, 0, 0},
                                {Rational(-6, 5), Rational(-1, 5), Rational(-3, 5), Rational(7, 5)},
                                {0, 0, 1, 0},
                                {Rational(1, 5), Rational(1, 5), Rational(-2, 5), Rational(-2, 5)}})));

        plan = recovery_plan(g, {2, 3});
        EXPECT(plan.status == RecoveryStatus::Exact);
        EXPECT(rat_eq(plan.inverse,
                      rat_rows({{1, 0, 0, 0},
                                {0, 1, 0, 0},
                                {Rational(-1, 4), Rational(-1, 2), 2, Rational(-7, 4)},
                                {0, 0, -1, 1}})));
    }
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 3. Randomized failure round trips: exact repairs are bit-equal, bounded
//    repairs dominate the lost state cell for cell.

bool criterion3() {
    std::mt19937_64 rng(0x5EED5EEDull);
    unsigned exact_n = 0, semi_n = 0;

    for (int trial = 0; trial < 200; ++trial) {
        const bool dedicated = trial % 2 == 0;
        const unsigned k = dedicated ? 1 + static_cast<unsigned>(rng() % 5)
                                     : 2 + static_cast<unsigned>(rng() % 4);
        const unsigned f = dedicated ? 1 + static_cast<unsigned>(rng() % k) : k;
        const auto g = dedicated ? GenerationMatrix::dedicated(k, f)
                                 : GenerationMatrix::distributed(k);

        SketchParams params;
        params.d = 4;
        params.w = 64;
        params.seed = 1000 + static_cast<std::uint64_t>(trial);

        std::vector<Sketch> data(k, Sketch(params));
        for (int i = 0; i < 10000; ++i) {
            const FlowId id = FlowId::from_u64(rng(), 64);
            data[rng() % k].update(id, 1 + rng() % 16);
        }
        std::vector<Sketch> red;
        for (unsigned r = 0; r < g.f; ++r) {
            std::vector<Rational> coeffs;
            std::vector<const Sketch*> ptrs;
            for (unsigned j = 0; j < k; ++j) {
                coeffs.emplace_back(g.red_rows(static_cast<Eigen::Index>(r),
                                               static_cast<Eigen::Index>(j)));
                ptrs.push_back(&data[j]);
            }
            red.push_back(linear_combine(coeffs, ptrs));
        }

        const unsigned tol = g.tolerance();
        std::set<unsigned> failed;
        const unsigned count = 1 + static_cast<unsigned>(rng() % tol);
        while (failed.size() < count) failed.insert(static_cast<unsigned>(rng() % g.node_count()));

        const auto plan = recovery_plan(g, failed);
        expect(plan.status != RecoveryStatus::Unrecoverable,
               "a failure set within tolerance must be repairable", __LINE__);

        RecoverySources sources;
        for (unsigned i = 0; i < k; ++i) {
            const bool gone = std::find(plan.failed_data.begin(), plan.failed_data.end(), i) !=
                              plan.failed_data.end();
            sources.data.push_back(gone ? nullptr : &data[i]);
        }
        for (unsigned r = 0; r < g.f; ++r) {
            const bool gone = std::find(plan.failed_red.begin(), plan.failed_red.end(), r) !=
                              plan.failed_red.end();
            sources.red.push_back(gone ? nullptr : &red[r]);
        }

        if (plan.status == RecoveryStatus::Exact) {
            ++exact_n;
            const auto recovered = apply_plan(g, plan, sources, params);
            expect(recovered.size() == plan.failed_data.size(), "every loss repaired", __LINE__);
            for (const auto& [idx, sk] : recovered) {
                expect(sk == data[idx], "exact repair must be bit-equal", __LINE__);
                expect(sk.total() == data[idx].total(), "repaired totals agree", __LINE__);
            }
        } else {
            ++semi_n;
            const auto recovered = semi_recover(g, plan, sources, params);
            expect(recovered.size() == plan.failed_data.size(), "every loss bounded", __LINE__);
            for (const auto& [idx, sk] : recovered)
                expect((sk.counts().array() >= data[idx].counts().array()).all(),
                       "bounded repair dominates the lost state", __LINE__);
        }
    }

    EXPECT(exact_n + semi_n == 200);
    EXPECT(exact_n > semi_n);
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 4. Every representation replays to the same per-cycle state as shipping
//    full counters, across the mapping and partition grid.

bool criterion4() {
    struct Combo {
        MappingKind mapping;
        PartitionKind pk;
        unsigned p;
    };
    const Combo combos[] = {
        {MappingKind::Dedicated, PartitionKind::Single, 1},
        {MappingKind::Dedicated, PartitionKind::Rows, 2},
        {MappingKind::Dedicated, PartitionKind::Cells, 2},
        {MappingKind::SweetSpot, PartitionKind::Rows, 2},
        {MappingKind::SweetSpot, PartitionKind::Cells, 2},
        {MappingKind::Clique, PartitionKind::Rows, 3},
        {MappingKind::Clique, PartitionKind::Cells, 3},
    };
    const RepKind reps[] = {RepKind::ItemBuff, RepKind::CntBuff, RepKind::FlwHash,
                            RepKind::CntHash, RepKind::CntDiff};

    const Trace trace = zipf_trace(5000, 100000, 1.0, 4242, 32);

    for (const auto& combo : combos) {
        SimConfig base;
        base.k = 4;
        base.f = 1;
        base.mapping = combo.mapping;
        base.scheme = PartitionScheme{combo.pk, combo.p};
        base.sketch = make_params(0.01, 0.01, 9);
        base.batch.B = 1000;
        base.batch.bits_mid = 32;
        base.cycles = 100;
        base.seed = 1;

        SimConfig full = base;
        full.policy = PolicyTag::Full;
        full.batch.representation = RepKind::ItemBuff;
        const auto baseline = run_simulation(validate_sim_config(full), trace.items, {});
        EXPECT(baseline.lost_nodes == 0);
        EXPECT(baseline.leftover_items == 0);

        for (const RepKind rep : reps) {
            SimConfig inc = base;
            inc.policy = PolicyTag::Incremental;
            inc.batch.representation = rep;
            const auto report = run_simulation(validate_sim_config(inc), trace.items, {});

            expect(report.cycles.size() == baseline.cycles.size(), "same cycle count", __LINE__);
            bool sums_ok = true, data_ok = true;
            for (std::size_t c = 0; c < report.cycles.size(); ++c) {
                sums_ok &= report.cycles[c].sums_digest == baseline.cycles[c].sums_digest;
                data_ok &= report.cycles[c].data_digest == baseline.cycles[c].data_digest;
            }
            expect(sums_ok, "backup tiles agree at every boundary", __LINE__);
            expect(data_ok, "data sketches agree at every boundary", __LINE__);
            expect(report.data_digests == baseline.data_digests, "final data state agrees",
                   __LINE__);
            expect(report.tile_digests == baseline.tile_digests, "final tile state agrees",
                   __LINE__);
        }
    }
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 5. The count-min guarantee on skewed streams: estimates never fall below
//    the true count, and the share of flows missing the epsilon*N band stays
//    under delta with a 99% one-sided binomial margin.

bool criterion5() {
    const auto probe = make_params(0.01, 0.01, 1);
    EXPECT(probe.d == 5);
    EXPECT(probe.w == 272);

    std::uint64_t flows_total = 0, violations = 0;
    bool one_sided = true;

    for (unsigned seed = 1; seed <= 30; ++seed) {
        const Trace trace = zipf_trace(10000, 100000, 1.0, 7000 + seed, 64);
        Sketch sketch(make_params(0.01, 0.01, seed));
        std::unordered_map<FlowId, std::uint64_t, FlowIdHash> truth;
        for (const FlowId& id : trace.items) {
            sketch.update(id, 1);
            ++truth[id];
        }
        const double band = 0.01 * static_cast<double>(trace.items.size());
        for (const auto& [id, count] : truth) {
            const std::uint64_t est = sketch.query(id);
            if (est < count) one_sided = false;
            else if (static_cast<double>(est - count) > band) ++violations;
            ++flows_total;
        }
    }

    EXPECT(one_sided);
    EXPECT(flows_total > 100000);
    const double fd = static_cast<double>(flows_total) * 0.01;
    const double margin = 2.326 * std::sqrt(static_cast<double>(flows_total) * 0.01 * 0.99);
    expect(static_cast<double>(violations) < fd - margin,
           "violation count clears the binomial band", __LINE__);
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 6. Pinned wire bytes: the committed frames decode to the recorded deltas
//    and encoding the same state reproduces them byte for byte.

std::string read_golden(const std::string& name) {
    const std::string path = std::string(SKETCHGUARD_GOLDEN_DIR) + "/" + name + ".hex";
    std::ifstream in(path);
    if (!in.good()) {
        expect(false, "golden frame file present", __LINE__);
        return {};
    }
    std::string hex, line;
    while (std::getline(in, line))
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) hex.push_back(c);
    return hex;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> hex_bytes(const std::string& hex) {
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        return static_cast<std::uint8_t>(10 + c - 'a');
    };
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
    return out;
}

// Same rig the frames were recorded from: three data nodes backed by two
// extra nodes, a 3 x 8 sketch, batch size 10, 32-bit identifiers, 4-bit
// indices and frequencies. Sender 1 ships in cycle 7 to nodes 3 and 4.
struct WireRig {
    unsigned d = 3, w = 8;
    std::uint32_t cycle = 7;
    unsigned sender = 1;

    static FlowId fid32(std::uint64_t v) { return FlowId::from_u64(v, 32); }

    SketchParams sparams() const {
        SketchParams p;
        p.d = d;
        p.w = w;
        p.seed = 1;
        return p;
    }
    BatchConfig cfg(RepKind kind) const {
        BatchConfig c;
        c.representation = kind;
        c.B = 10;
        c.bits_mid = 32;
        c.bits_w = 4;
        c.bits_B = 4;
        c.bits_N = 32;
        return validate_batch_config(c, d, w);
    }
    WireContext ctx(RepKind kind, PartitionKind pk, unsigned p,
                    const CoverageMapping& mapping) const {
        WireContext c{&mapping, PartitionScheme{pk, p}, d, w, cfg(kind)};
        validate_context(c);
        return c;
    }

    Batch item_batch() const {
        auto b = make_batch(cfg(RepKind::ItemBuff), d, w);
        std::get<ItemBuffRep>(b.rep).items = {fid32(0x11223344), fid32(0xBEEF),
                                              fid32(0x11223344)};
        b.b_prime = 3;
        return b;
    }
    Batch flow_batch() const {
        auto b = make_batch(cfg(RepKind::FlwHash), d, w);
        std::get<FlwHashRep>(b.rep).freq = {{fid32(0xBEEF), 1}, {fid32(0x11223344), 2}};
        b.b_prime = 3;
        return b;
    }
    Batch cnt_buff_batch() const {
        auto b = make_batch(cfg(RepKind::CntBuff), d, w);
        auto& idx = std::get<CntBuffRep>(b.rep).idx;
        const unsigned cols[3][4] = {{0, 4, 0, 7}, {1, 1, 6, 2}, {7, 7, 7, 0}};
        for (unsigned i = 0; i < 3; ++i)
            for (unsigned j = 0; j < 4; ++j) idx(i, j) = cols[i][j];
        b.b_prime = 4;
        return b;
    }
    Batch cnt_hash_batch() const {
        auto b = make_batch(cfg(RepKind::CntHash), d, w);
        auto& tables = std::get<CntHashRep>(b.rep).tables;
        tables[0] = {{0, 2}, {4, 1}, {7, 1}};
        tables[1] = {{1, 2}, {2, 1}, {6, 1}};
        tables[2] = {{0, 1}, {7, 3}};
        b.b_prime = 4;
        return b;
    }
    Batch cnt_diff_batch() const {
        auto b = make_batch(cfg(RepKind::CntDiff), d, w);
        auto& diff = std::get<CntDiffRep>(b.rep).diff;
        diff(0, 0) = 3;
        diff(0, 7) = 1;
        diff(1, 3) = 2;
        diff(1, 6) = 2;
        diff(2, 5) = 4;
        b.b_prime = 4;
        return b;
    }
    Sketch data_sketch() const {
        Sketch s(sparams());
        for (unsigned i = 0; i < d; ++i)
            for (unsigned j = 0; j < w; ++j) s.add_cell(i, j, 100ull * i + 3ull * j + 1);
        return s;
    }
};

bool criterion6() {
    const WireRig rig;
    const auto map1 = coverage_from_generation(GenerationMatrix::dedicated(3, 2), 1);
    const auto map2 = coverage_from_generation(GenerationMatrix::dedicated(3, 2), 2);

    struct BatchCase {
        Batch batch;
        WireContext ctx;
        std::vector<std::string> names;  // one frame per partition
    };
    const BatchCase cases[] = {
        {rig.item_batch(), rig.ctx(RepKind::ItemBuff, PartitionKind::Single, 1, map1),
         {"item_buff"}},
        {rig.flow_batch(), rig.ctx(RepKind::FlwHash, PartitionKind::Single, 1, map1),
         {"flw_hash"}},
        {rig.cnt_buff_batch(), rig.ctx(RepKind::CntBuff, PartitionKind::Rows, 2, map2),
         {"cnt_buff_p1", "cnt_buff_p2"}},
        {rig.cnt_hash_batch(), rig.ctx(RepKind::CntHash, PartitionKind::Rows, 2, map2),
         {"cnt_hash_p1", "cnt_hash_p2"}},
        {rig.cnt_diff_batch(), rig.ctx(RepKind::CntDiff, PartitionKind::Cells, 2, map2),
         {"cnt_diff_p1", "cnt_diff_p2"}},
    };

    for (const auto& c : cases) {
        // Encoding the recorded state reproduces the committed frames.
        const auto shares = encode_batch(c.batch, c.ctx, rig.cycle, rig.sender);
        expect(shares.size() == 2 * c.names.size(), "two recipients per partition", __LINE__);
        for (std::size_t q = 0; q < c.names.size(); ++q)
            expect(to_hex(pack_share(shares[2 * q])) == read_golden(c.names[q]),
                   "encoded frame matches the committed bytes", __LINE__);

        // The committed frames replay to exactly the recorded batch delta.
        Sketch sum(rig.sparams());
        for (const auto& name : c.names) {
            const auto bytes = hex_bytes(read_golden(name));
            const Share share = unpack_share(bytes, 3);
            decode_apply(share, 3, sum, c.ctx);
        }
        const CountMatrix want = batch_delta(c.batch, sum.hash(), rig.d, rig.w);
        expect(sum.counts() == want, "replayed delta matches the recorded one", __LINE__);
    }

    {
        // Full frames carry whole counter rows; both partition layouts must
        // reassemble the recorded sketch exactly.
        const Sketch state = rig.data_sketch();
        const auto ctx1 = rig.ctx(RepKind::CntDiff, PartitionKind::Single, 1, map1);
        const auto ctx2 = rig.ctx(RepKind::CntDiff, PartitionKind::Cells, 2, map2);
        const struct {
            const WireContext* ctx;
            std::vector<std::string> names;
        } full_cases[] = {
            {&ctx1, {"full_single"}},
            {&ctx2, {"full_cells_p1", "full_cells_p2"}},
        };
        for (const auto& fc : full_cases) {
            const auto shares = full_share_encode(state, *fc.ctx, rig.cycle, rig.sender);
            for (std::size_t q = 0; q < fc.names.size(); ++q)
                expect(to_hex(pack_share(shares[2 * q])) == read_golden(fc.names[q]),
                       "encoded full frame matches the committed bytes", __LINE__);

            CountMatrix cells = CountMatrix::Zero(rig.d, rig.w);
            for (const auto& name : fc.names) {
                const Share share = unpack_share(hex_bytes(read_golden(name)), 3);
                for (const auto& [row, col, value] : decode_full_cells(share, *fc.ctx))
                    cells(row, col) += value;
            }
            expect(cells == state.counts(), "full frames reassemble the recorded sketch",
                   __LINE__);
        }
    }

    {
        const auto ctx = rig.ctx(RepKind::ItemBuff, PartitionKind::Single, 1, map1);
        const auto shares = encode_alive(ctx, rig.cycle, rig.sender);
        EXPECT(to_hex(pack_share(shares[0])) == read_golden("alive"));

        const Share share = unpack_share(hex_bytes(read_golden("alive")), 3);
        EXPECT(share.header.policy == PolicyTag::Alive);
        EXPECT(share.header.cycle == 7);
        EXPECT(share.header.sender == 1);
        EXPECT(share.payload.empty());
        Sketch sum(rig.sparams());
        decode_apply(share, 3, sum, ctx);
        EXPECT(sum.counts() == CountMatrix::Zero(rig.d, rig.w));
    }
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 7. Instrumented traffic equals the closed-form cost model on failure-free
//    runs: payload bits, header bits, membership tests and remote table
//    operations, cycle by cycle.

bool criterion7() {
    const Trace trace = zipf_trace(3000, 60000, 1.0, 99, 32);
    const RepKind reps[] = {RepKind::ItemBuff, RepKind::CntBuff, RepKind::CntDiff};

    struct Rig {
        MappingKind mapping;
        PartitionKind pk;
        unsigned p;
    };
    const Rig rigs[] = {
        {MappingKind::Dedicated, PartitionKind::Single, 1},
        {MappingKind::SweetSpot, PartitionKind::Rows, 2},
    };

    for (const auto& rig : rigs)
        for (const RepKind rep : reps) {
            SimConfig cfg;
            cfg.k = 4;
            cfg.f = 1;
            cfg.mapping = rig.mapping;
            cfg.scheme = PartitionScheme{rig.pk, rig.p};
            cfg.sketch = make_params(0.01, 0.01, 3);
            cfg.batch.representation = rep;
            cfg.batch.B = 500;
            cfg.batch.bits_mid = 32;
            cfg.policy = PolicyTag::Incremental;
            cfg.cycles = 40;
            cfg.seed = 1;

            const auto report = run_simulation(validate_sim_config(cfg), trace.items, {});
            EXPECT(report.failures.empty());
            EXPECT(report.lost_nodes == 0);

            bool any_payload = false;
            bool payload_ok = true, header_ok = true, membership_ok = true, remote_ok = true;
            for (const auto& c : report.cycles) {
                any_payload |= c.payload_bits > 0;
                payload_ok &= c.payload_bits == c.predicted_payload_bits;
                header_ok &= c.header_bits == c.predicted_header_bits;
                membership_ok &=
                    c.sender_membership + c.receiver_membership == c.predicted_membership;
                remote_ok &= c.receiver_hash_ops == c.predicted_remote_ops;
            }
            EXPECT(any_payload);
            expect(payload_ok, "payload bits equal the closed form", __LINE__);
            expect(header_ok, "header bits equal the closed form", __LINE__);
            expect(membership_ok, "membership tests equal the closed form", __LINE__);
            expect(remote_ok, "remote table operations equal the closed form", __LINE__);
        }
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 8. Failure-point estimation error: the padded backup estimate never falls
//    below the true count, and padding costs more error than the backup
//    alone carries, at every sampled batch size.

bool criterion8() {
    const Trace trace = zipf_trace(800, 40000, 1.0, 29, 64);
    const auto params = make_params(0.005, 0.01, 5);

    const std::uint64_t batch_sizes[] = {100, 500, 2000};
    const double fail_ats[] = {1.0 / 3.0, 0.5, 2.0 / 3.0};
    const double points[] = {0.1, 0.5, 0.9, 1.0};

    for (const std::uint64_t B : batch_sizes)
        for (const double fail_at : fail_ats)
            for (const double point : points) {
                const auto rep = mre_experiment(trace.items, B, params, fail_at, point);
                EXPECT(rep.flows > 0);
                expect(rep.one_sided, "padded estimate covers the true count for every flow",
                       __LINE__);
            }

    for (const std::uint64_t B : batch_sizes) {
        const auto rep = mre_experiment(trace.items, B, params, 0.5, 0.5);
        expect(rep.mre_plus_nonfailed > rep.mre_backup_nonfailed,
               "padding dominates the pure backup error", __LINE__);
    }
    return g_failed == 0;
}

// -------------------------------------------------------------------------
// 9. Batch statistics and the representation choice rules.

bool criterion9() {
    {
        const FlowId a = FlowId::from_u64(1, 32), b = FlowId::from_u64(2, 32);
        const auto stats = beta_stats({a, a, b}, 3);
        EXPECT(stats.batch_beta.size() == 1);
        EXPECT(stats.batch_beta[0] == 1.5);
        EXPECT(stats.beta_avg == 1.5);
        EXPECT(stats.percentile(50) == 1.5);
    }
    EXPECT(theta_ratio(64, 16) == Rational(5, 4));
    EXPECT(static_cast<double>(theta_ratio(64, 16)) == 1.25);
    EXPECT(theta_prime_ratio(16, 16) == Rational(2));

    struct Fixture {
        const char* name;
        std::uint64_t B;
        double avg;
        std::array<double, 5> pct;  // levels 5, 25, 50, 75, 95
        unsigned bits_mid, bits_B;
        double alpha;
        TableChoice want;
        unsigned want_level;  // FlwHash only
    };
    const Fixture fixtures[] = {
        {"plain table below the cutoff", 50, 5.0, {2, 2, 2, 2, 2}, 64, 16, 0.8,
         TableChoice::StdTable, 0},
        {"plain table at the cutoff", 100, 1.0, {1, 1, 1, 1, 1}, 64, 16, 0.8,
         TableChoice::StdTable, 0},
        {"plain table for single items", 1, 1.0, {1, 1, 1, 1, 1}, 64, 16, 0.8,
         TableChoice::StdTable, 0},
        {"mean below the ratio", 1000, 1.0, {1, 1, 1, 1, 1}, 64, 16, 0.8,
         TableChoice::ItemBuff, 0},
        {"mean just below the ratio", 1000, 1.24, {1.0, 1.1, 1.2, 1.3, 1.4}, 64, 16, 0.8,
         TableChoice::ItemBuff, 0},
        {"fifth percentile qualifies", 101, 3.0, {1.6, 1.8, 2.0, 2.5, 3.0}, 64, 16, 0.8,
         TableChoice::FlwHash, 5},
        {"first qualifier is the quartile", 1000, 3.0, {1.3, 1.7, 2.0, 2.5, 3.0}, 64, 16, 0.8,
         TableChoice::FlwHash, 25},
        {"first qualifier is the median", 1000, 3.0, {1.3, 1.5, 1.7, 2.5, 3.0}, 64, 16, 0.8,
         TableChoice::FlwHash, 50},
        {"first qualifier is the upper quartile", 1000, 3.0, {1.3, 1.4, 1.5, 1.7, 3.0}, 64, 16,
         0.8, TableChoice::FlwHash, 75},
        {"only the tail qualifies", 1000, 4.0, {1.3, 1.4, 1.5, 1.55, 3.5}, 64, 16, 0.8,
         TableChoice::FlwHash, 95},
        {"nothing clears the space floor", 1000, 3.0, {1.3, 1.4, 1.5, 1.55, 1.56}, 64, 16, 0.8,
         TableChoice::ItemBuff, 0},
        {"tail above the mean is no qualifier", 1000, 1.5, {1.26, 1.3, 1.4, 1.5, 9.0}, 64, 16,
         0.5, TableChoice::ItemBuff, 0},
        {"unit slack tightens the floor", 1000, 1.5, {1.26, 1.3, 1.4, 1.5, 1.5}, 64, 16, 1.0,
         TableChoice::FlwHash, 5},
        {"exactly at the floor fails", 1000, 3.0, {2.5, 2.5, 2.5, 2.5, 2.5}, 64, 16, 0.5,
         TableChoice::ItemBuff, 0},
        {"exactly at the mean passes", 1000, 2.0, {2.0, 2.0, 2.0, 2.0, 2.0}, 64, 16, 0.8,
         TableChoice::FlwHash, 5},
        {"floor hit exactly moves to the quartile", 1000, 5.0, {2.0, 2.2, 2.4, 2.6, 2.8}, 64,
         16, 0.625, TableChoice::FlwHash, 25},
        {"wide identifiers lower the ratio", 1000, 1.19, {1.0, 1.05, 1.1, 1.15, 1.19}, 80, 16,
         0.8, TableChoice::ItemBuff, 0},
        {"wide identifiers qualify early", 1000, 2.0, {1.21, 1.5, 1.6, 1.7, 1.8}, 80, 16, 1.0,
         TableChoice::FlwHash, 5},
        {"narrow identifiers raise the ratio", 500, 2.5, {1.9, 2.1, 2.3, 2.4, 2.6}, 16, 16, 0.8,
         TableChoice::ItemBuff, 0},
        {"narrow identifiers still qualify late", 500, 3.0, {1.9, 2.1, 2.3, 2.6, 2.9}, 16, 16,
         0.8, TableChoice::FlwHash, 75},
    };

    for (const auto& fx : fixtures) {
        BetaStats stats;
        stats.B = fx.B;
        stats.total_items = fx.B * 10;
        stats.distinct_flows = fx.B;
        stats.full_batches = 10;
        stats.beta_avg = fx.avg;
        for (std::size_t i = 0; i < 5; ++i) stats.percentiles[i] = fx.pct[i];

        const auto rec =
            recommend_representation(stats, theta_ratio(fx.bits_mid, fx.bits_B), fx.alpha);
        expect(rec.choice == fx.want, fx.name, __LINE__);
        if (fx.want == TableChoice::StdTable)
            expect(rec.capacity == 2 * fx.B, fx.name, __LINE__);
        if (fx.want == TableChoice::FlwHash && rec.choice == fx.want) {
            expect(rec.percentile == fx.want_level, fx.name, __LINE__);
            std::size_t idx = 0;
            for (std::size_t i = 0; i < BetaStats::kLevels.size(); ++i)
                if (BetaStats::kLevels[i] == fx.want_level) idx = i;
            expect(rec.beta_hat == fx.pct[idx], fx.name, __LINE__);
        }
    }
    return g_failed == 0;
}

struct Entry {
    int n;
    bool (*fn)();
    const char* what;
};
const Entry kCriteria[] = {
    {1, criterion1, "generation matrices, span checks and minor determinants"},
    {2, criterion2, "worked recovery inverses match hand calculations"},
    {3, criterion3, "randomized failure round trips repair exactly or bound from above"},
    {4, criterion4, "every representation replays to the full-counter state"},
    {5, criterion5, "count-min estimates stay one-sided and inside the error band"},
    {6, criterion6, "committed wire frames decode and re-encode byte for byte"},
    {7, criterion7, "measured traffic equals the closed-form cost model"},
    {8, criterion8, "failure-point estimates stay one-sided and padding costs error"},
    {9, criterion9, "batch statistics and representation choice rules"},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<const Entry*> run;
    if (argc > 1) {
        const int n = std::atoi(argv[1]);
        if (n < 1 || n > 9) {
            std::fprintf(stderr, "usage: %s [1..9]\n", argv[0]);
            return 2;
        }
        run.push_back(&kCriteria[n - 1]);
    } else {
        for (const auto& e : kCriteria) run.push_back(&e);
    }

    int rc = 0;
    for (const Entry* e : run) {
        g_failed = 0;
        bool ok = false;
        try {
            ok = e->fn();
        } catch (const std::exception& ex) {
            std::fprintf(stderr, "    unexpected exception: %s\n", ex.what());
            ok = false;
        }
        std::printf("criterion %d: %s (%s)\n", e->n, ok ? "PASS" : "FAIL", e->what);
        if (!ok) rc = 1;
    }
    return rc;
}
