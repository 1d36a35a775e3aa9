#include "sketchguard/sketch.hpp"

#include <cmath>
#include <cstdio>

namespace sketchguard {

std::string FlowId::to_hex() const {
    const std::size_t nbytes = wire_bytes();
    std::string out = "0x";
    char buf[3];
    for (std::size_t i = 32 - nbytes; i < 32; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", bytes[i]);
        out += buf;
    }
    return out;
}

std::pair<unsigned, unsigned> derive_dims(double epsilon, double delta) {
    if (!(epsilon > 0.0) || !(epsilon <= 1.0))
        throw param_error("derive_dims: epsilon must be in (0, 1]");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw param_error("derive_dims: delta must be in (0, 1)");
    const auto d = static_cast<unsigned>(std::ceil(std::log(1.0 / delta)));
    const auto w = static_cast<unsigned>(std::ceil(std::exp(1.0) / epsilon));
    return {d, w};
}

SketchParams make_params(double epsilon, double delta, std::uint64_t seed,
                         unsigned counter_bits) {
    auto [d, w] = derive_dims(epsilon, delta);
    SketchParams p;
    p.epsilon = epsilon;
    p.delta = delta;
    p.d = d;
    p.w = w;
    p.seed = seed;
    p.counter_bits = counter_bits;
    return p;
}

Sketch::Sketch(const SketchParams& params)
    : params_(params),
      hash_(params.d, params.w, params.seed),
      counts_(CountMatrix::Zero(params.d, params.w)) {
    if (params.counter_bits < 1 || params.counter_bits > 64)
        throw param_error("counter_bits must be in [1, 64]");
}

void Sketch::update(const FlowId& x, std::uint64_t c) {
    if (c == 0) throw param_error("update: increment must be >= 1");
    const std::uint64_t limit = max_counter();
    for (unsigned i = 0; i < params_.d; ++i) {
        auto& cell = counts_(i, hash_.col(i, x));
        if (cell > limit - c) throw overflow_error("counter overflow on update");
        cell += c;
    }
    total_ += c;
}

std::uint64_t Sketch::query(const FlowId& x) const {
    std::uint64_t est = ~0ull;
    for (unsigned i = 0; i < params_.d; ++i)
        est = std::min(est, counts_(i, hash_.col(i, x)));
    return est;
}

void Sketch::add_cell(unsigned row, unsigned col, std::uint64_t c) {
    auto& cell = counts_(row, col);
    const std::uint64_t limit = max_counter();
    if (cell > limit - c) throw overflow_error("counter overflow on add_cell");
    cell += c;
}

void Sketch::reset_epoch() {
    counts_.setZero();
    total_ = 0;
    ++epoch_;
}

std::uint64_t Sketch::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned i = 0; i < params_.d; ++i) {
        for (unsigned j = 0; j < params_.w; ++j) {
            std::uint64_t v = counts_(i, j);
            std::uint8_t bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<std::uint8_t>(v >> (8 * b));
            h = fnv1a64(bytes, 8, h);
        }
    }
    return h;
}

Sketch merge(const Sketch& a, const Sketch& b) {
    if (a.params() != b.params()) throw param_error("merge: parameter mismatch");
    Sketch out = a;
    const std::uint64_t limit = out.max_counter();
    for (unsigned i = 0; i < a.params().d; ++i) {
        for (unsigned j = 0; j < a.params().w; ++j) {
            const std::uint64_t rhs = b.counts()(i, j);
            auto& cell = out.counts()(i, j);
            if (cell > limit - rhs) throw overflow_error("counter overflow on merge");
            cell += rhs;
        }
    }
    out.set_total(a.total() + b.total());
    return out;
}

Sketch linear_combine(std::span<const Rational> coeffs,
                      std::span<const Sketch* const> sketches) {
    if (coeffs.size() != sketches.size() || sketches.empty())
        throw param_error("linear_combine: need one coefficient per sketch");
    const SketchParams& p = sketches[0]->params();
    for (const Sketch* s : sketches)
        if (s->params() != p) throw param_error("linear_combine: parameter mismatch");

    Sketch out(p);
    const std::uint64_t limit = out.max_counter();
    Rational acc;
    for (unsigned i = 0; i < p.d; ++i) {
        for (unsigned j = 0; j < p.w; ++j) {
            acc = 0;
            for (std::size_t s = 0; s < sketches.size(); ++s)
                acc += coeffs[s] * Rational(sketches[s]->counts()(i, j));
            if (acc < 0) throw recovery_error("linear_combine: negative cell");
            if (boost::multiprecision::denominator(acc) != 1)
                throw recovery_error("linear_combine: non-integral cell");
            const BigInt num = boost::multiprecision::numerator(acc);
            if (num > limit) throw overflow_error("linear_combine: counter overflow");
            out.counts()(i, j) = num.convert_to<std::uint64_t>();
        }
    }
    Rational t = 0;
    for (std::size_t s = 0; s < sketches.size(); ++s)
        t += coeffs[s] * Rational(sketches[s]->total());
    if (t >= 0 && boost::multiprecision::denominator(t) == 1)
        out.set_total(boost::multiprecision::numerator(t).convert_to<std::uint64_t>());
    else
        out.set_total(out.counts().row(0).sum());
    return out;
}

}  // namespace sketchguard
