#pragma once

#include <cstdint>
#include <vector>

#include "sketchguard/common.hpp"
#include "sketchguard/errors.hpp"

namespace sketchguard {

// splitmix64: the usual constant-incremented, finalized generator. Used to
// derive the per-row hash parameters and the synthetic flow identifiers, so
// every output here is pinned across platforms.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

// Identifiers wider than 64 bits are first folded to one machine word with a
// fixed mixing pass over their 8-byte limbs; the pairwise hash then sees a
// 64-bit value regardless of the configured identifier width.
inline std::uint64_t mix_to_u64(const FlowId& id) {
    if (id.bits <= 64) return id.low64();
    std::uint64_t h = 0x51e03bd772f0fe35ull;
    for (int limb = 0; limb < 4; ++limb) {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v = (v << 8) | id.bytes[static_cast<std::size_t>(limb * 8 + i)];
        h = splitmix64_mix(h ^ v);
    }
    return h;
}

// d pairwise-independent functions h_i(x) = ((a_i * x + b_i) mod p) mod w with
// p = 2^61 - 1. Parameters are drawn from a seeded splitmix64 stream, so the
// same (seed, d, w) always yields the same column for every identifier.
class HashFamily {
public:
    static constexpr std::uint64_t kPrime = (1ull << 61) - 1;

    HashFamily() = default;

    HashFamily(unsigned d, unsigned w, std::uint64_t seed) : d_(d), w_(w), seed_(seed) {
        if (d == 0 || w == 0) throw param_error("hash family needs d >= 1 and w >= 1");
        SplitMix64 rng(seed);
        a_.reserve(d);
        b_.reserve(d);
        for (unsigned i = 0; i < d; ++i) {
            a_.push_back(rng.next() % (kPrime - 1) + 1);
            b_.push_back(rng.next() % kPrime);
        }
    }

    // 0-based column for row i.
    unsigned col(unsigned row, const FlowId& x) const {
        const std::uint64_t v = mix_to_u64(x);
        const auto m = static_cast<unsigned __int128>(a_[row]) * v + b_[row];
        return static_cast<unsigned>(static_cast<std::uint64_t>(m % kPrime) % w_);
    }

    unsigned rows() const { return d_; }
    unsigned width() const { return w_; }
    std::uint64_t seed() const { return seed_; }

    bool operator==(const HashFamily& o) const {
        return d_ == o.d_ && w_ == o.w_ && seed_ == o.seed_;
    }

private:
    unsigned d_ = 0;
    unsigned w_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::uint64_t> a_;
    std::vector<std::uint64_t> b_;
};

}  // namespace sketchguard
