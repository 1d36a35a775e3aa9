#include "sketchguard/coverage.hpp"

#include <algorithm>
#include <tuple>

namespace sketchguard {

namespace {

std::int64_t coeff_of(const CoverageBlock& b, unsigned node) {
    for (const auto& [t, c] : b.terms)
        if (t == node) return c;
    return 0;
}

CoverageMapping ring_sweet_spot(unsigned k) {
    CoverageMapping m;
    m.kind = MappingKind::SweetSpot;
    m.k = k;
    m.f = 1;
    m.p = 2;
    m.holders = k;
    // Parity ring: even holders (0-based) keep a partition-2 sum, odd holders
    // a partition-1 sum, each over the next two nodes around the ring.
    for (unsigned h = 0; h < k; ++h) {
        CoverageBlock b;
        b.holder = h;
        b.partition = (h % 2 == 0) ? 2 : 1;
        b.terms = {{(h + 1) % k, 1}, {(h + 2) % k, 1}};
        m.blocks.push_back(std::move(b));
    }
    // Odd rings leave exactly one hole: partition 1 of node 1. A single-term
    // block on node 2 closes it.
    if (k % 2 == 1) m.blocks.push_back({2, 1, {{1, 1}}});
    return m;
}

CoverageMapping clique4() {
    CoverageMapping m;
    m.kind = MappingKind::Clique;
    m.k = 4;
    m.f = 1;
    m.p = 3;
    m.holders = 4;
    m.blocks = {
        {0, 2, {{2, 1}, {3, 1}}}, {0, 3, {{1, 1}}},
        {1, 1, {{3, 1}, {0, 1}}}, {1, 3, {{2, 1}}},
        {2, 2, {{0, 1}, {1, 1}}}, {2, 3, {{3, 1}}},
        {3, 1, {{1, 1}, {2, 1}}}, {3, 3, {{0, 1}}},
    };
    return m;
}

CoverageMapping imbalanced4() {
    CoverageMapping m;
    m.kind = MappingKind::ImbalancedSpace;
    m.k = 4;
    m.f = 1;
    m.p = 3;
    m.holders = 4;
    m.blocks = {
        {0, 1, {{2, 1}, {3, 1}}}, {0, 3, {{1, 1}, {2, 1}}},
        {1, 3, {{0, 1}, {3, 1}}},
        {2, 1, {{0, 1}, {1, 1}}}, {2, 2, {{1, 1}, {3, 1}}},
        {3, 2, {{0, 1}, {2, 1}}},
    };
    return m;
}

}  // namespace

std::vector<const CoverageBlock*> CoverageMapping::covers(unsigned node, unsigned partition) const {
    std::vector<const CoverageBlock*> out;
    for (const auto& b : blocks)
        if (b.partition == partition && coeff_of(b, node) != 0) out.push_back(&b);
    return out;
}

std::vector<const CoverageBlock*> CoverageMapping::held_by(unsigned node) const {
    std::vector<const CoverageBlock*> out;
    for (const auto& b : blocks)
        if (b.holder == node) out.push_back(&b);
    return out;
}

std::vector<unsigned> CoverageMapping::covering_nodes(unsigned node) const {
    std::vector<unsigned> out;
    for (const auto& b : blocks)
        if (b.holder != node && coeff_of(b, node) != 0) out.push_back(b.holder);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

CoverageMapping build_coverage(MappingKind kind, unsigned k, unsigned f) {
    if (f != 1) throw param_error("build_coverage: mappings are defined for f = 1");
    switch (kind) {
        case MappingKind::SweetSpot:
            if (k < 3) throw param_error("build_coverage: SweetSpot needs k >= 3");
            return ring_sweet_spot(k);
        case MappingKind::Clique:
            if (k != 4) throw param_error("build_coverage: Clique is defined for k = 4");
            return clique4();
        case MappingKind::ImbalancedSpace:
            if (k != 4) throw param_error("build_coverage: ImbalancedSpace is defined for k = 4");
            return imbalanced4();
        default:
            throw param_error("build_coverage: use coverage_from_generation for matrix strategies");
    }
}

CoverageMapping coverage_from_generation(const GenerationMatrix& g, unsigned p) {
    if (p == 0) throw param_error("coverage_from_generation: p must be >= 1");
    CoverageMapping m;
    m.k = g.k;
    m.f = g.strategy == Strategy::Dedicated ? g.f : 1;
    m.p = p;
    if (g.strategy == Strategy::Dedicated) {
        m.kind = MappingKind::Dedicated;
        m.holders = g.k + g.f;
        for (unsigned r = 0; r < g.f; ++r)
            for (unsigned q = 1; q <= p; ++q) {
                CoverageBlock b;
                b.holder = g.k + r;
                b.partition = q;
                for (unsigned j = 0; j < g.k; ++j) b.terms.emplace_back(j, g.red_rows(r, j));
                m.blocks.push_back(std::move(b));
            }
    } else {
        m.kind = MappingKind::Distributed;
        m.holders = g.k;
        for (unsigned i = 0; i < g.k; ++i)
            for (unsigned q = 1; q <= p; ++q) {
                CoverageBlock b;
                b.holder = i;
                b.partition = q;
                for (unsigned j = 0; j < g.k; ++j) b.terms.emplace_back(j, g.red_rows(i, j));
                m.blocks.push_back(std::move(b));
            }
    }
    return m;
}

MappingStats mapping_stats(const CoverageMapping& m) {
    MappingStats stats;
    stats.space = Rational(static_cast<long>(m.blocks.size()), static_cast<long>(m.p));

    bool first = true;
    Rational sum = 0;
    for (unsigned n = 0; n < m.k; ++n) {
        stats.r_c.push_back(static_cast<unsigned>(m.covering_nodes(n).size()));

        // Distinct remote fetches to bring node n back: for each of its data
        // partitions one covering block plus that block's other terms, and for
        // each block it held that block's remote terms.
        std::set<std::tuple<bool, unsigned, unsigned>> fetched;
        for (unsigned q = 1; q <= m.p; ++q) {
            const auto cov = m.covers(n, q);
            const CoverageBlock* use = nullptr;
            for (const auto* b : cov)
                if (b->holder != n && (use == nullptr || b->holder < use->holder)) use = b;
            if (use == nullptr) continue;
            fetched.insert({true, use->holder, use->partition});
            for (const auto& [t, c] : use->terms)
                if (t != n && c != 0) fetched.insert({false, t, q});
        }
        for (const auto* b : m.held_by(n))
            for (const auto& [t, c] : b->terms)
                if (t != n && c != 0) fetched.insert({false, t, b->partition});

        const Rational cost(static_cast<long>(fetched.size()), static_cast<long>(m.p));
        sum += cost;
        if (first || cost < stats.recovery_min) stats.recovery_min = cost;
        if (first || cost > stats.recovery_max) stats.recovery_max = cost;
        first = false;
    }
    stats.recovery_mean = m.k ? sum / m.k : Rational(0);
    return stats;
}

MappingRecoveryPlan mapping_recovery_plan(const CoverageMapping& m,
                                          const std::set<unsigned>& failed_nodes) {
    if (m.kind == MappingKind::Dedicated || m.kind == MappingKind::Distributed)
        throw param_error("mapping_recovery_plan: matrix strategies recover via recovery_plan");
    for (unsigned n : failed_nodes)
        if (n >= m.node_count()) throw param_error("mapping_recovery_plan: unknown node id");

    MappingRecoveryPlan plan;
    std::set<std::pair<unsigned, unsigned>> unresolved;
    std::set<std::pair<unsigned, unsigned>> exact;
    for (unsigned n : failed_nodes)
        for (unsigned q = 1; q <= m.p; ++q) unresolved.insert({n, q});

    const auto live = [&](unsigned node) { return !failed_nodes.contains(node); };
    const auto available = [&](unsigned node, unsigned q) {
        return live(node) || exact.contains({node, q});
    };

    bool progress = true;
    while (progress) {
        progress = false;
        for (auto it = unresolved.begin(); it != unresolved.end();) {
            const auto [n, q] = *it;
            const CoverageBlock* use = nullptr;
            for (const auto* b : m.covers(n, q)) {
                if (!live(b->holder)) continue;
                bool ok = true;
                for (const auto& [t, c] : b->terms)
                    if (t != n && c != 0 && !available(t, q)) ok = false;
                if (ok && (use == nullptr || b->holder < use->holder)) use = b;
            }
            if (use == nullptr) {
                ++it;
                continue;
            }
            PartitionRecoveryStep step;
            step.node = n;
            step.partition = q;
            step.status = RecoveryStatus::Exact;
            step.block_holder = use->holder;
            step.block_partition = use->partition;
            step.divisor = coeff_of(*use, n);
            for (const auto& [t, c] : use->terms)
                if (t != n && c != 0) step.subtract.emplace_back(t, c);
            plan.steps.push_back(std::move(step));
            exact.insert({n, q});
            it = unresolved.erase(it);
            progress = true;
        }
    }

    std::set<unsigned> lost;
    for (const auto& [n, q] : unresolved) {
        const CoverageBlock* use = nullptr;
        for (const auto* b : m.covers(n, q))
            if (live(b->holder) && (use == nullptr || b->holder < use->holder)) use = b;
        if (use == nullptr) {
            lost.insert(n);
            continue;
        }
        // Upper bound: subtract what is known, floor-divide by the own
        // coefficient; the unavailable terms keep the result an overestimate.
        PartitionRecoveryStep step;
        step.node = n;
        step.partition = q;
        step.status = RecoveryStatus::Semi;
        step.block_holder = use->holder;
        step.block_partition = use->partition;
        step.divisor = coeff_of(*use, n);
        for (const auto& [t, c] : use->terms)
            if (t != n && c != 0 && available(t, q)) step.subtract.emplace_back(t, c);
        plan.steps.push_back(std::move(step));
    }

    plan.unrecoverable.assign(lost.begin(), lost.end());
    if (!plan.unrecoverable.empty()) plan.status = RecoveryStatus::Unrecoverable;
    else if (std::any_of(plan.steps.begin(), plan.steps.end(),
                         [](const auto& s) { return s.status == RecoveryStatus::Semi; }))
        plan.status = RecoveryStatus::Semi;
    else plan.status = RecoveryStatus::Exact;
    return plan;
}

}  // namespace sketchguard
