#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sketchguard/common.hpp"
#include "sketchguard/errors.hpp"
#include "sketchguard/hashing.hpp"
#include "sketchguard/rational.hpp"

namespace sketchguard {

using CountMatrix = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SketchParams {
    double epsilon = 0.01;
    double delta = 0.01;
    unsigned d = 0;
    unsigned w = 0;
    std::uint64_t seed = 1;
    // Logical counter width. Updates that would push a counter past
    // 2^counter_bits - 1 raise overflow_error instead of wrapping. Data
    // sketches default to 32, sum-sketches use 64.
    unsigned counter_bits = 32;

    bool operator==(const SketchParams&) const = default;
};

// d = ceil(ln(1/delta)), w = ceil(e/epsilon).
std::pair<unsigned, unsigned> derive_dims(double epsilon, double delta);

SketchParams make_params(double epsilon, double delta, std::uint64_t seed,
                         unsigned counter_bits = 32);

class Sketch {
public:
    Sketch() = default;
    explicit Sketch(const SketchParams& params);

    void update(const FlowId& x, std::uint64_t c = 1);
    std::uint64_t query(const FlowId& x) const;

    // Adds c at an explicit (row, col), bypassing the hash family. Used when
    // applying decoded counter deltas and recovery results.
    void add_cell(unsigned row, unsigned col, std::uint64_t c);

    const SketchParams& params() const { return params_; }
    const HashFamily& hash() const { return hash_; }
    const CountMatrix& counts() const { return counts_; }
    CountMatrix& counts() { return counts_; }
    std::uint64_t total() const { return total_; }
    void set_total(std::uint64_t t) { total_ = t; }
    std::uint64_t epoch() const { return epoch_; }

    // Starts a new epoch: zeroes the counters, keeps the hash family.
    void reset_epoch();

    std::uint64_t max_counter() const {
        return params_.counter_bits >= 64 ? ~0ull : (1ull << params_.counter_bits) - 1;
    }

    std::uint64_t digest() const;

    bool operator==(const Sketch& o) const {
        return params_ == o.params_ && counts_ == o.counts_ && total_ == o.total_;
    }

private:
    SketchParams params_;
    HashFamily hash_;
    CountMatrix counts_;
    std::uint64_t total_ = 0;
    std::uint64_t epoch_ = 0;
};

// Element-wise sum of two sketches over identical parameters.
Sketch merge(const Sketch& a, const Sketch& b);

// Element-wise sum of signed rational multiples of sketches. Every resulting
// cell must come out a non-negative integer within the counter width, which
// is exactly what a consistent recovery produces; anything else raises
// recovery_error.
Sketch linear_combine(std::span<const Rational> coeffs, std::span<const Sketch* const> sketches);

}  // namespace sketchguard
