#include "sketchguard/redundancy.hpp"

#include <algorithm>
#include <functional>

namespace sketchguard {

IntMatrix mr_generate(unsigned k, unsigned f) {
    if (k < 1) throw param_error("mr_generate: k must be >= 1");
    if (f < 1 || f > k) throw param_error("mr_generate: f must be in [1, k]");
    IntMatrix m(f, k);
    for (unsigned j = 0; j < k; ++j) m(0, j) = 1;
    for (unsigned i = 1; i < f; ++i) {
        m(i, 0) = 1;
        for (unsigned j = 1; j < k; ++j) m(i, j) = m(i, j - 1) + m(i - 1, j - 1);
    }
    return m;
}

IntMatrix pascal_generate(unsigned k) {
    if (k < 1) throw param_error("pascal_generate: k must be >= 1");
    IntMatrix p(k, k);
    for (unsigned j = 0; j < k; ++j) p(0, j) = 1;
    for (unsigned i = 1; i < k; ++i) {
        p(i, 0) = 1;
        for (unsigned j = 1; j < k; ++j) p(i, j) = p(i - 1, j) + p(i, j - 1);
    }
    return p;
}

namespace {

void for_each_subset(unsigned n, unsigned f, const std::function<void(const std::vector<unsigned>&)>& fn) {
    std::vector<unsigned> idx(f);
    for (unsigned i = 0; i < f; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        // Advance to the next lexicographic subset.
        int pos = static_cast<int>(f) - 1;
        while (pos >= 0 && idx[static_cast<unsigned>(pos)] == n - f + static_cast<unsigned>(pos)) --pos;
        if (pos < 0) break;
        ++idx[static_cast<unsigned>(pos)];
        for (unsigned i = static_cast<unsigned>(pos) + 1; i < f; ++i) idx[i] = idx[i - 1] + 1;
    }
}

}  // namespace

std::vector<BigInt> minor_determinants(const IntMatrix& m, unsigned f) {
    if (f < 1 || static_cast<Eigen::Index>(f) > m.rows())
        throw param_error("minor_determinants: f must be in [1, rows]");
    const auto n = static_cast<unsigned>(m.cols());
    if (f > n) throw param_error("minor_determinants: f exceeds column count");
    std::vector<BigInt> dets;
    for_each_subset(n, f, [&](const std::vector<unsigned>& cols) {
        RationalMatrix sub(f, f);
        for (unsigned i = 0; i < f; ++i)
            for (unsigned j = 0; j < f; ++j) sub(i, j) = m(i, cols[j]);
        dets.push_back(boost::multiprecision::numerator(det_exact(sub)));
    });
    return dets;
}

bool spans_check(const IntMatrix& m, unsigned f) {
    for (const BigInt& d : minor_determinants(m, f))
        if (d == 0) return false;
    return true;
}

IntMatrix circular_displacement(const IntMatrix& mr) {
    if (mr.rows() != mr.cols()) throw param_error("circular_displacement: matrix must be square");
    const auto k = static_cast<unsigned>(mr.rows());
    IntMatrix out(k, k);
    for (unsigned i = 0; i < k; ++i) out.row(i) = mr.row((i + 2) % k);
    return out;
}

GenerationMatrix GenerationMatrix::dedicated(unsigned k, unsigned f) {
    GenerationMatrix g;
    g.strategy = Strategy::Dedicated;
    g.k = k;
    g.f = f;
    g.red_rows = mr_generate(k, f);
    return g;
}

GenerationMatrix GenerationMatrix::distributed(unsigned k) {
    if (k < 2) throw param_error("distributed redundancy needs k >= 2");
    GenerationMatrix g;
    g.strategy = Strategy::Distributed;
    g.k = k;
    g.f = k;
    g.red_rows = circular_displacement(mr_generate(k, k));
    return g;
}

unsigned GenerationMatrix::tolerance() const {
    return strategy == Strategy::Dedicated ? f : k / 2;
}

RecoveryPlan recovery_plan(const GenerationMatrix& g, const std::set<unsigned>& failed_nodes) {
    RecoveryPlan plan;
    for (unsigned id : failed_nodes) {
        if (id >= g.node_count()) throw param_error("recovery_plan: unknown node id");
        if (g.strategy == Strategy::Dedicated) {
            if (id < g.k) plan.failed_data.push_back(id);
            else plan.failed_red.push_back(id - g.k);
        } else {
            plan.failed_data.push_back(id);
            plan.failed_red.push_back(id);
        }
    }

    if (g.strategy == Strategy::Distributed && failed_nodes.size() > g.tolerance()) {
        plan.status = RecoveryStatus::Unrecoverable;
        return plan;
    }

    std::vector<unsigned> live_red;
    for (unsigned r = 0; r < g.f; ++r)
        if (!std::binary_search(plan.failed_red.begin(), plan.failed_red.end(), r))
            live_red.push_back(r);

    // Stand the live redundant rows in for the erased data rows, lowest index
    // first, and try to invert the resulting k x k system.
    std::vector<SourceRef> sources;
    RationalMatrix a = RationalMatrix::Zero(g.k, g.k);
    std::size_t next_red = 0;
    bool complete = true;
    for (unsigned i = 0; i < g.k; ++i) {
        if (!std::binary_search(plan.failed_data.begin(), plan.failed_data.end(), i)) {
            a(i, i) = 1;
            sources.push_back({false, i});
        } else if (next_red < live_red.size()) {
            const unsigned r = live_red[next_red++];
            for (unsigned j = 0; j < g.k; ++j) a(i, j) = g.red_rows(r, j);
            sources.push_back({true, r});
        } else {
            complete = false;
            break;
        }
    }

    if (complete) {
        if (auto inv = invert_exact(a)) {
            plan.status = RecoveryStatus::Exact;
            plan.sources = std::move(sources);
            plan.inverse = std::move(*inv);
            return plan;
        }
    }

    if (live_red.empty()) {
        plan.status = plan.failed_data.empty() ? RecoveryStatus::Exact : RecoveryStatus::Unrecoverable;
        return plan;
    }

    // Upper-bound fallback: all coefficients are positive, so the first live
    // redundant row bounds every lost sketch after the live data terms are
    // peeled off.
    plan.status = RecoveryStatus::Semi;
    const unsigned r0 = live_red.front();
    for (unsigned i : plan.failed_data)
        plan.bounds.push_back({i, r0, g.red_rows(r0, i)});
    return plan;
}

namespace {

// Exact per-cell combination of count matrices; rejects negative or
// fractional results and overflow past limit.
CountMatrix combine_cells(const std::vector<std::pair<Rational, const CountMatrix*>>& terms,
                          unsigned d, unsigned w, std::uint64_t limit) {
    CountMatrix out(d, w);
    Rational acc;
    for (unsigned i = 0; i < d; ++i) {
        for (unsigned j = 0; j < w; ++j) {
            acc = 0;
            for (const auto& [coeff, m] : terms) acc += coeff * Rational((*m)(i, j));
            if (acc < 0) throw recovery_error("recovery produced a negative counter");
            if (boost::multiprecision::denominator(acc) != 1)
                throw recovery_error("recovery produced a fractional counter");
            const BigInt num = boost::multiprecision::numerator(acc);
            if (num > limit) throw recovery_error("recovery overflowed the counter width");
            out(i, j) = num.convert_to<std::uint64_t>();
        }
    }
    return out;
}

Sketch sketch_from_counts(const SketchParams& params, CountMatrix&& counts) {
    Sketch s(params);
    s.counts() = std::move(counts);
    s.set_total(s.counts().row(0).sum());
    return s;
}

const Sketch* source_sketch(const RecoverySources& sources, const SourceRef& ref,
                            unsigned d, unsigned w) {
    const auto& pool = ref.redundant ? sources.red : sources.data;
    if (ref.index >= pool.size() || pool[ref.index] == nullptr)
        throw recovery_error("recovery source sketch is unavailable");
    const Sketch* s = pool[ref.index];
    if (s->counts().rows() != static_cast<Eigen::Index>(d) ||
        s->counts().cols() != static_cast<Eigen::Index>(w))
        throw recovery_error("recovery source sketch has mismatching dimensions");
    return s;
}

}  // namespace

std::map<unsigned, Sketch> apply_plan(const GenerationMatrix& g, const RecoveryPlan& plan,
                                      const RecoverySources& sources,
                                      const SketchParams& out_params) {
    if (plan.status != RecoveryStatus::Exact)
        throw recovery_error("apply_plan: plan is not exact");
    std::map<unsigned, Sketch> out;
    const std::uint64_t limit =
        out_params.counter_bits >= 64 ? ~0ull : (1ull << out_params.counter_bits) - 1;
    for (unsigned i : plan.failed_data) {
        std::vector<std::pair<Rational, const CountMatrix*>> terms;
        for (unsigned s = 0; s < g.k; ++s) {
            const Rational& c = plan.inverse(i, s);
            if (c == 0) continue;
            terms.emplace_back(c, &source_sketch(sources, plan.sources[s], out_params.d, out_params.w)->counts());
        }
        out.emplace(i, sketch_from_counts(out_params,
                                          combine_cells(terms, out_params.d, out_params.w, limit)));
    }
    return out;
}

std::map<unsigned, Sketch> semi_recover(const GenerationMatrix& g, const RecoveryPlan& plan,
                                        const RecoverySources& sources,
                                        const SketchParams& out_params) {
    if (plan.status != RecoveryStatus::Semi)
        throw recovery_error("semi_recover: plan is not semi");
    std::map<unsigned, Sketch> out;
    const std::uint64_t limit =
        out_params.counter_bits >= 64 ? ~0ull : (1ull << out_params.counter_bits) - 1;

    // Residue per redundant row used by the bounds: X = R - sum(live data
    // terms), which equals the sum of the lost sketches' terms and is
    // therefore non-negative in every cell.
    std::map<unsigned, CountMatrix> residues;
    for (const SemiBound& b : plan.bounds) {
        if (residues.contains(b.red_row)) continue;
        std::vector<std::pair<Rational, const CountMatrix*>> terms;
        terms.emplace_back(1, &source_sketch(sources, {true, b.red_row}, out_params.d, out_params.w)->counts());
        for (unsigned j = 0; j < g.k; ++j) {
            if (std::binary_search(plan.failed_data.begin(), plan.failed_data.end(), j)) continue;
            if (g.red_rows(b.red_row, j) == 0) continue;
            terms.emplace_back(Rational(-g.red_rows(b.red_row, j)),
                               &source_sketch(sources, {false, j}, out_params.d, out_params.w)->counts());
        }
        residues.emplace(b.red_row, combine_cells(terms, out_params.d, out_params.w, ~0ull));
    }

    for (const SemiBound& b : plan.bounds) {
        const CountMatrix& x = residues.at(b.red_row);
        CountMatrix m(out_params.d, out_params.w);
        for (unsigned i = 0; i < out_params.d; ++i)
            for (unsigned j = 0; j < out_params.w; ++j) {
                const std::uint64_t v = x(i, j) / static_cast<std::uint64_t>(b.coeff);
                if (v > limit) throw recovery_error("semi bound overflowed the counter width");
                m(i, j) = v;
            }
        out.emplace(b.data_index, sketch_from_counts(out_params, std::move(m)));
    }
    return out;
}

}  // namespace sketchguard
