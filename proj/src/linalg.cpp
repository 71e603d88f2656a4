#include "finslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace finslab {

namespace {

struct Tableau {
    Mat t;  // rows 0..m-1 constraints, row m reduced costs; last column rhs
    std::vector<int> basis;
    int m = 0;
    int cols = 0;  // number of variable columns

    void pivot(int r, int c) {
        t.row(r) /= t(r, c);
        for (int i = 0; i <= m; ++i) {
            if (i == r) continue;
            const double f = t(i, c);
            if (f != 0.0) t.row(i) -= f * t.row(r);
        }
        basis[r] = c;
    }

    // Bland's rule. Returns false if unbounded.
    bool run(int allowed_cols, double tol) {
        for (int iter = 0; iter < 50000; ++iter) {
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j)
                if (t(m, j) < -tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (t(i, enter) <= tol) continue;
                const double ratio = t(i, cols) / t(i, enter);
                if (ratio < best - 1e-15 ||
                    (std::abs(ratio - best) <= 1e-15 && leave >= 0 && basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        throw NumericError("solve_lp: iteration limit reached");
    }
};

}  // namespace

LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c, double tol) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    require(b.size() == m && c.size() == n, "solve_lp: shape mismatch");

    Tableau tab;
    tab.m = m;
    tab.cols = n + m;
    tab.t = Mat::Zero(m + 1, n + m + 1);
    tab.basis.resize(m);
    for (int i = 0; i < m; ++i) {
        const double s = b[i] < 0 ? -1.0 : 1.0;
        tab.t.row(i).head(n) = s * A.row(i);
        tab.t(i, n + i) = 1.0;
        tab.t(i, n + m) = s * b[i];
        tab.basis[i] = n + i;
    }
    for (int i = 0; i < m; ++i) {
        tab.t.row(m).head(n) -= tab.t.row(i).head(n);
        tab.t(m, n + m) -= tab.t(i, n + m);
    }

    LpResult res;
    tab.run(n + m, tol);
    const double infeas = -tab.t(m, n + m);
    if (infeas > tol * std::max(1.0, b.cwiseAbs().maxCoeff())) {
        res.status = LpStatus::infeasible;
        return res;
    }
    for (int i = 0; i < m; ++i) {
        if (tab.basis[i] < n) continue;
        for (int j = 0; j < n; ++j)
            if (std::abs(tab.t(i, j)) > tol) {
                tab.pivot(i, j);
                break;
            }
    }

    tab.t.row(m).setZero();
    tab.t.row(m).head(n) = c.transpose();
    for (int i = 0; i < m; ++i) {
        const int bi = tab.basis[i];
        const double cb = bi < n ? c[bi] : 0.0;
        if (cb != 0.0) tab.t.row(m) -= cb * tab.t.row(i);
    }
    if (!tab.run(n, tol)) {
        res.status = LpStatus::unbounded;
        return res;
    }
    res.status = LpStatus::optimal;
    res.x = Vec::Zero(n);
    for (int i = 0; i < m; ++i)
        if (tab.basis[i] < n) res.x[tab.basis[i]] = std::max(0.0, tab.t(i, n + m));
    res.objective = c.dot(res.x);
    return res;
}

bool in_convex_hull(const std::vector<Vec>& points, const Vec& p, double tol) {
    if (points.empty()) return false;
    const int d = static_cast<int>(p.size());
    const int n = static_cast<int>(points.size());
    Mat A(d + 1, n);
    for (int j = 0; j < n; ++j) {
        A.col(j).head(d) = points[j];
        A(d, j) = 1.0;
    }
    Vec b(d + 1);
    b.head(d) = p;
    b[d] = 1.0;
    return solve_lp(A, b, Vec::Zero(n), tol).status == LpStatus::optimal;
}

Vec nnls(const Mat& A, const Vec& b, double tol) {
    const int n = static_cast<int>(A.cols());
    Vec x = Vec::Zero(n);
    std::vector<bool> passive(n, false);
    for (int outer = 0; outer < 3 * n + 10; ++outer) {
        const Vec w = A.transpose() * (b - A * x);
        int t = -1;
        double wmax = tol * std::max(1.0, b.norm());
        for (int j = 0; j < n; ++j)
            if (!passive[j] && w[j] > wmax) {
                wmax = w[j];
                t = j;
            }
        if (t < 0) break;
        passive[t] = true;
        for (int inner = 0; inner < 3 * n + 10; ++inner) {
            std::vector<int> idx;
            for (int j = 0; j < n; ++j)
                if (passive[j]) idx.push_back(j);
            Mat Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
            const Vec z = Ap.colPivHouseholderQr().solve(b);
            bool feasible = true;
            for (Eigen::Index k = 0; k < z.size(); ++k)
                if (z[k] <= 0) feasible = false;
            if (feasible) {
                x.setZero();
                for (size_t k = 0; k < idx.size(); ++k) x[idx[k]] = z[static_cast<Eigen::Index>(k)];
                break;
            }
            double alpha = 1.0;
            for (size_t k = 0; k < idx.size(); ++k) {
                const double zk = z[static_cast<Eigen::Index>(k)];
                if (zk <= 0) alpha = std::min(alpha, x[idx[k]] / (x[idx[k]] - zk));
            }
            for (size_t k = 0; k < idx.size(); ++k)
                x[idx[k]] += alpha * (z[static_cast<Eigen::Index>(k)] - x[idx[k]]);
            for (int j = 0; j < n; ++j)
                if (passive[j] && x[j] <= 1e-15) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
        }
    }
    return x;
}

std::vector<Vec> orthonormal_span(const std::vector<Vec>& vectors, int d, double pivot) {
    std::vector<Vec> basis;
    for (const Vec& v : vectors) {
        require_dim(v, d, "orthonormal_span");
        Vec r = v;
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& b : basis) r -= b.dot(r) * b;
        const double n = r.norm();
        if (n > pivot * std::max(1.0, v.norm())) basis.push_back(r / n);
        if (static_cast<int>(basis.size()) == d) break;
    }
    return basis;
}

std::vector<Vec> orthogonal_complement(const std::vector<Vec>& vectors, int d, double pivot) {
    std::vector<Vec> span = orthonormal_span(vectors, d, pivot);
    const size_t k = span.size();
    for (int i = 0; i < d && static_cast<int>(span.size()) < d; ++i) {
        Vec r = Vec::Unit(d, i);
        for (int pass = 0; pass < 2; ++pass)
            for (const Vec& b : span) r -= b.dot(r) * b;
        const double n = r.norm();
        if (n > 1e-6) span.push_back(r / n);
    }
    return std::vector<Vec>(span.begin() + static_cast<std::ptrdiff_t>(k), span.end());
}

int affine_rank(const std::vector<Vec>& points, double pivot) {
    if (points.size() < 2) return 0;
    std::vector<Vec> diffs;
    for (size_t i = 1; i < points.size(); ++i) diffs.push_back(points[i] - points[0]);
    return static_cast<int>(orthonormal_span(diffs, static_cast<int>(points[0].size()), pivot).size());
}

const GaussRule& gauss_rule(int n) {
    require(n >= 1 && n <= 512, "gauss_rule: order must lie in [1, 512]");
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (slot) return *slot;
    auto rule = std::make_unique<GaussRule>();
    rule->x.resize(static_cast<size_t>(n));
    rule->w.resize(static_cast<size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule->x[static_cast<size_t>(i)] = -x;
        rule->x[static_cast<size_t>(n - 1 - i)] = x;
        rule->w[static_cast<size_t>(i)] = w;
        rule->w[static_cast<size_t>(n - 1 - i)] = w;
    }
    slot = std::move(rule);
    return *slot;
}

Mat projector(const std::vector<Vec>& basis, int d) {
    Mat P = Mat::Zero(d, d);
    for (const Vec& b : basis) P += b * b.transpose();
    return P;
}

}  // namespace finslab
