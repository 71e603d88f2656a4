#pragma once

#include "finslab/types.hpp"

#include <numeric>
#include <vector>

namespace finslab {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vec x;
    double objective = 0.0;
};

/// minimize c.x  subject to  A x = b, x >= 0.
/// Dense two-phase tableau simplex with Bland's rule; meant for a few hundred
/// columns and a handful of rows.
LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c, double tol = 1e-11);

/// Is `p` in conv(points)?
bool in_convex_hull(const std::vector<Vec>& points, const Vec& p, double tol = 1e-9);

/// min ||A x - b|| over x >= 0 (Lawson-Hanson). Returns x.
Vec nnls(const Mat& A, const Vec& b, double tol = 1e-12);

/// Orthonormal basis of span(vectors) by modified Gram-Schmidt; a vector is
/// dropped when its residual falls below `pivot` times max(1, its norm).
std::vector<Vec> orthonormal_span(const std::vector<Vec>& vectors, int d, double pivot = 1e-10);

/// Orthonormal basis of the orthogonal complement of span(vectors).
std::vector<Vec> orthogonal_complement(const std::vector<Vec>& vectors, int d,
                                       double pivot = 1e-10);

/// Affine dimension of a point set.
int affine_rank(const std::vector<Vec>& points, double pivot = 1e-10);

/// Orthogonal projector onto span(basis) (basis assumed orthonormal).
Mat projector(const std::vector<Vec>& basis, int d);

/// Gauss-Legendre rule on [-1, 1]. Rules are computed once per order and
/// shared read-only afterwards.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
const GaussRule& gauss_rule(int n);

/// Calls f(indices) for every k-subset of {0..n-1} in lexicographic order.
template <class F>
void for_each_subset(int n, int k, F&& f) {
    if (k > n || k < 0) return;
    std::vector<int> idx(static_cast<size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
        f(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<size_t>(i)];
        for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
}

}  // namespace finslab
