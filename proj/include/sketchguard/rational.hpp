#pragma once

#include <optional>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Dense>

#include "sketchguard/errors.hpp"

namespace sketchguard {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

using RationalMatrix = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;
using RationalVector = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;

// Exact Gauss-Jordan inverse. Pivoting just takes the first non-zero entry in
// the column; with exact arithmetic there is no stability concern. Returns
// nothing when the matrix is singular.
inline std::optional<RationalMatrix> invert_exact(const RationalMatrix& m) {
    const auto n = m.rows();
    if (n != m.cols()) throw param_error("invert_exact: matrix must be square");
    RationalMatrix a = m;
    RationalMatrix inv = RationalMatrix::Identity(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = -1;
        for (Eigen::Index r = col; r < n; ++r) {
            if (a(r, col) != 0) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) return std::nullopt;
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            inv.row(pivot).swap(inv.row(col));
        }
        const Rational p = a(col, col);
        for (Eigen::Index c = 0; c < n; ++c) {
            a(col, c) /= p;
            inv(col, c) /= p;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            if (r == col || a(r, col) == 0) continue;
            const Rational factor = a(r, col);
            for (Eigen::Index c = 0; c < n; ++c) {
                a(r, c) -= factor * a(col, c);
                inv(r, c) -= factor * inv(col, c);
            }
        }
    }
    return inv;
}

// Exact determinant by fraction-free elimination over the rationals.
inline Rational det_exact(RationalMatrix a) {
    const auto n = a.rows();
    if (n != a.cols()) throw param_error("det_exact: matrix must be square");
    Rational det = 1;
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = -1;
        for (Eigen::Index r = col; r < n; ++r) {
            if (a(r, col) != 0) {
                pivot = r;
                break;
            }
        }
        if (pivot < 0) return Rational(0);
        if (pivot != col) {
            a.row(pivot).swap(a.row(col));
            det = -det;
        }
        det *= a(col, col);
        for (Eigen::Index r = col + 1; r < n; ++r) {
            if (a(r, col) == 0) continue;
            const Rational factor = a(r, col) / a(col, col);
            for (Eigen::Index c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
        }
    }
    return det;
}

// floor(num / den) for a non-negative rational, as used by the upper-bound
// recovery path.
inline BigInt floor_div(const Rational& v) {
    return boost::multiprecision::numerator(v) / boost::multiprecision::denominator(v);
}

}  // namespace sketchguard
