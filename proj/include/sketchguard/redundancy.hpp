#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "sketchguard/rational.hpp"
#include "sketchguard/sketch.hpp"

namespace sketchguard {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// First f rows of the elastic k-column redundant coefficient matrix:
// row 1 and column 1 are all ones, every other entry is the sum of its left
// and upper-left neighbours. Any f of its k columns form a nonsingular block,
// which is what makes the redundant sums recoverable.
IntMatrix mr_generate(unsigned k, unsigned f);

// Symmetric Pascal matrix (ones on the first row and column, every other
// entry the sum of the entries above and to the left). An alternative
// generator with the same spanning behaviour, brute-force checked for small k.
IntMatrix pascal_generate(unsigned k);

// True iff every f-column subset of the first f rows of M has a non-zero
// determinant, evaluated exactly.
bool spans_check(const IntMatrix& m, unsigned f);

// The determinants behind spans_check, one per column subset in lexicographic
// subset order. Exposed for inspection and regression pinning.
std::vector<BigInt> minor_determinants(const IntMatrix& m, unsigned f);

// Row permutation for spreading redundancy across the data nodes themselves:
// node i (0-based) stores row (i + 2) mod k of the square coefficient matrix.
// The shift keeps every tolerated failure pattern solvable, which a plain
// row-to-node identity assignment would not.
IntMatrix circular_displacement(const IntMatrix& mr);

enum class Strategy { Dedicated, Distributed };

// Linear model of the whole deployment: every stored sketch is a combination
// of the k data sketches. Data rows are implicitly the identity; red_rows
// holds the redundant coefficients. Under the distributed strategy node i
// holds data sketch i plus redundant row i.
struct GenerationMatrix {
    Strategy strategy = Strategy::Dedicated;
    unsigned k = 0;
    unsigned f = 0;  // number of redundant rows (== k when distributed)
    IntMatrix red_rows;

    static GenerationMatrix dedicated(unsigned k, unsigned f);
    static GenerationMatrix distributed(unsigned k);

    // Largest concurrent failure count recovery will attempt.
    unsigned tolerance() const;
    unsigned node_count() const {
        return strategy == Strategy::Dedicated ? k + f : k;
    }
};

enum class RecoveryStatus { Exact, Semi, Unrecoverable };

struct SourceRef {
    bool redundant = false;
    unsigned index = 0;
    bool operator==(const SourceRef&) const = default;
};

// One per failed data sketch on the Semi path: the sketch is bounded by
// floor(X / coeff) where X is the residue of redundant row red_row after
// subtracting every live data term.
struct SemiBound {
    unsigned data_index = 0;
    unsigned red_row = 0;
    std::int64_t coeff = 1;
};

struct RecoveryPlan {
    RecoveryStatus status = RecoveryStatus::Exact;
    std::vector<unsigned> failed_data;
    std::vector<unsigned> failed_red;
    // Exact: sources[j] names the live row standing in data position j, and
    // data_i = sum_j inverse(i, j) * value(sources[j]).
    std::vector<SourceRef> sources;
    RationalMatrix inverse;
    // Semi: per failed data sketch, the bound to take.
    std::vector<SemiBound> bounds;
};

// Builds the plan for a set of failed node ids. Dedicated ids: 0..k-1 are the
// data nodes, k..k+f-1 the redundant nodes. Distributed ids: 0..k-1, and a
// failed node loses both its data sketch and its redundant row. Erased data
// positions are filled with the live redundant rows in ascending index order;
// if the substituted system inverts, the plan is Exact, otherwise it falls
// back to per-sketch upper bounds (Semi) or Unrecoverable when no redundant
// row survives. Distributed recovery refuses more than floor(k/2) failures.
RecoveryPlan recovery_plan(const GenerationMatrix& g, const std::set<unsigned>& failed_nodes);

struct RecoverySources {
    std::vector<const Sketch*> data;  // size k, nullptr where failed
    std::vector<const Sketch*> red;   // size f, nullptr where failed
};

// Evaluates an Exact plan. Returned sketches carry out_params and totals
// recomputed from row 0 (valid for unit-increment data sketches).
std::map<unsigned, Sketch> apply_plan(const GenerationMatrix& g, const RecoveryPlan& plan,
                                      const RecoverySources& sources,
                                      const SketchParams& out_params);

// Evaluates a Semi plan: element-wise upper bounds that never fall below the
// lost sketches.
std::map<unsigned, Sketch> semi_recover(const GenerationMatrix& g, const RecoveryPlan& plan,
                                        const RecoverySources& sources,
                                        const SketchParams& out_params);

}  // namespace sketchguard
