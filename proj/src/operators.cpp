#include "finslab/operators.hpp"

#include "finslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace finslab {

EdgeSet::EdgeSet(std::vector<Vec> edges, std::string name) : edges_(std::move(edges)), name_(std::move(name)) {
    require(!edges_.empty(), "EdgeSet: empty edge list");
    const int d = static_cast<int>(edges_[0].size());
    require(d >= 1, "EdgeSet: edges must have dimension >= 1");
    for (const Vec& e : edges_) {
        require_dim(e, d, "EdgeSet");
        require(e.allFinite() && e.norm() > 0, "EdgeSet: edges must be finite and nonzero");
    }
    opposite_.assign(edges_.size(), -1);
    for (size_t i = 0; i < edges_.size(); ++i) {
        for (size_t j = 0; j < edges_.size(); ++j) {
            if (j != i && (edges_[i] - edges_[j]).norm() <= 1e-12 * edges_[i].norm())
                throw InputError("EdgeSet: duplicate edge");
            if ((edges_[i] + edges_[j]).norm() <= 1e-12 * edges_[i].norm()) opposite_[i] = static_cast<int>(j);
        }
        if (opposite_[i] < 0) throw InputError("EdgeSet: edge set is not symmetric under negation");
    }
    if (static_cast<int>(orthonormal_span(edges_, d).size()) != d)
        throw InputError("EdgeSet: edges do not span the ambient space");
}

EdgeSet builtin_edges(const std::string& name) {
    std::vector<Vec> e;
    if (name == "z2-diag") {
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j)
                if (i != 0 || j != 0) e.push_back(Vec{{double(i), double(j)}});
    } else if (name == "triangular") {
        const double h = std::sqrt(3.0) / 2.0;
        e = {Vec{{1.0, 0.0}}, Vec{{-1.0, 0.0}}, Vec{{0.5, h}}, Vec{{-0.5, -h}}, Vec{{-0.5, h}}, Vec{{0.5, -h}}};
    } else if (name.size() >= 2 && name[0] == 'z' &&
               name.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int d = std::stoi(name.substr(1));
        require(d >= 1 && d <= 8, "builtin_edges: z<d> needs 1 <= d <= 8");
        for (int i = 0; i < d; ++i) {
            e.push_back(Vec::Unit(d, i));
            e.push_back(-Vec::Unit(d, i));
        }
    } else {
        throw InputError("unknown built-in edge set '" + name + "'");
    }
    return EdgeSet(e, name);
}

// ---------------------------------------------------------------------------
// Quadratic extrema over a polytope given by its points.

namespace {

struct Facet {
    Vec n;
    double b;
};

std::vector<Facet> facets_of(const std::vector<Vec>& ys, int m, double tol) {
    std::vector<Facet> out;
    auto add = [&](Vec n, double b) {
        for (const Facet& f : out)
            if ((f.n - n).norm() < 1e-9 && std::abs(f.b - b) < 1e-9 * std::max(1.0, std::abs(b))) return;
        out.push_back({std::move(n), b});
    };
    if (m == 1) {
        double lo = ys[0][0], hi = ys[0][0];
        for (const Vec& y : ys) {
            lo = std::min(lo, y[0]);
            hi = std::max(hi, y[0]);
        }
        add(Vec::Constant(1, 1.0), hi);
        add(Vec::Constant(1, -1.0), -lo);
        return out;
    }
    const int n = static_cast<int>(ys.size());
    Mat D(m - 1, m);
    for_each_subset(n, m, [&](const std::vector<int>& idx) {
        for (int r = 1; r < m; ++r) D.row(r - 1) = (ys[idx[r]] - ys[idx[0]]).transpose();
        Eigen::FullPivLU<Mat> lu(D);
        lu.setThreshold(1e-10);
        if (lu.rank() != m - 1) return;
        Vec nrm = lu.kernel().col(0);
        nrm.normalize();
        const double b = nrm.dot(ys[idx[0]]);
        double smin = 0.0, smax = 0.0;
        for (const Vec& y : ys) {
            const double s = nrm.dot(y) - b;
            smin = std::min(smin, s);
            smax = std::max(smax, s);
        }
        if (smax <= tol)
            add(nrm, b);
        else if (smin >= -tol)
            add(-nrm, -b);
    });
    return out;
}

}  // namespace

QuadExtrema quad_extrema_over_polytope(const SymMatrix& X, const std::vector<Vec>& points, int max_dim) {
    require(!points.empty(), "quad_extrema: empty face");
    const int d = X.dim();
    for (const Vec& v : points) require_dim(v, d, "quad_extrema");

    QuadExtrema r;
    r.min = std::numeric_limits<double>::infinity();
    r.max = -std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec& q) {
        const double val = X.quad(q);
        if (val < r.min) {
            r.min = val;
            r.argmin = q;
        }
        if (val > r.max) {
            r.max = val;
            r.argmax = q;
        }
    };
    for (const Vec& v : points) consider(v);

    const Vec& v0 = points[0];
    std::vector<Vec> diffs;
    for (size_t i = 1; i < points.size(); ++i) diffs.push_back(points[i] - v0);
    const std::vector<Vec> basis = orthonormal_span(diffs, d);
    const int m = static_cast<int>(basis.size());
    if (m > max_dim)
        throw InputError("quad_extrema: face dimension " + std::to_string(m) + " exceeds " +
                         std::to_string(max_dim));
    if (m == 0) return r;

    Mat B(d, m);
    for (int k = 0; k < m; ++k) B.col(k) = basis[k];
    std::vector<Vec> ys;
    double scale = 1.0;
    for (const Vec& v : points) {
        ys.push_back(B.transpose() * (v - v0));
        scale = std::max(scale, ys.back().norm());
    }
    const double tol = 1e-10 * scale;
    const std::vector<Facet> facets = facets_of(ys, m, tol);
    const Mat H = B.transpose() * X.mat() * B;
    const Vec g = B.transpose() * X.mat() * v0;
    const double hscale = std::max(1.0, H.norm());

    auto inside = [&](const Vec& y) {
        for (const Facet& f : facets)
            if (f.n.dot(y) > f.b + tol) return false;
        return true;
    };

    const int nf = static_cast<int>(facets.size());
    for (int k = 0; k < m; ++k) {
        for_each_subset(nf, k, [&](const std::vector<int>& idx) {
            Vec y0 = Vec::Zero(m);
            Mat Z = Mat::Identity(m, m);
            if (k > 0) {
                Mat N(k, m);
                Vec bs(k);
                for (int s = 0; s < k; ++s) {
                    N.row(s) = facets[idx[s]].n.transpose();
                    bs[s] = facets[idx[s]].b;
                }
                Eigen::CompleteOrthogonalDecomposition<Mat> cod(N);
                cod.setThreshold(1e-10);
                y0 = cod.solve(bs);
                if ((N * y0 - bs).norm() > tol) return;
                Eigen::FullPivLU<Mat> lu(N);
                lu.setThreshold(1e-10);
                if (lu.rank() == m) {
                    if (inside(y0)) consider(v0 + B * y0);
                    return;
                }
                Z = lu.kernel().householderQr().householderQ() * Mat::Identity(m, m - lu.rank());
            }
            const Mat Hz = Z.transpose() * H * Z;
            Eigen::SelfAdjointEigenSolver<Mat> es(Hz);
            if (es.eigenvalues().cwiseAbs().minCoeff() < 1e-12 * hscale) return;
            const Vec rhs = -Z.transpose() * (H * y0 + g);
            const Vec z = es.eigenvectors() *
                          (es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * rhs));
            const Vec y = y0 + Z * z;
            if (inside(y)) consider(v0 + B * y);
        });
    }
    return r;
}

QuadExtrema quad_extrema_over_face(const SymMatrix& X, const SubdifferentialFace& face) {
    if (face.dim > 3) throw InputError("quad_extrema_over_face: face dimension > 3");
    return quad_extrema_over_polytope(X, face.vertices, 3);
}

// ---------------------------------------------------------------------------

IndexSets index_sets(const EdgeSet& E, const Vec& p, double tol) {
    require_dim(p, E.dim(), "index_sets");
    require(tol >= 0, "index_sets: tol must be >= 0");
    IndexSets s;
    const double pn = p.norm();
    double best = -std::numeric_limits<double>::infinity();
    double least = std::numeric_limits<double>::infinity();
    std::vector<double> ip(static_cast<size_t>(E.size()));
    for (int i = 0; i < E.size(); ++i) {
        ip[i] = p.dot(E[i]);
        best = std::max(best, ip[i]);
        least = std::min(least, std::abs(ip[i]));
    }
    for (int i = 0; i < E.size(); ++i) {
        const double slack = tol * pn * E[i].norm();
        if (ip[i] >= best - slack) s.J.push_back(i);
        if (std::abs(ip[i]) <= least + slack) s.L.push_back(i);
    }
    return s;
}

namespace {

std::pair<double, double> extrema_over(const EdgeSet& E, const std::vector<int>& idx, const SymMatrix& X) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i : idx) {
        const double v = X.quad(E[i]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

void check_pair_input(const EdgeSet& E, const Vec& p, const SymMatrix& X) {
    require_dim(p, E.dim(), "operator");
    require(X.dim() == E.dim(), "operator: matrix dimension mismatch");
}

}  // namespace

OperatorPair inf_laplacian_pair(const PolyhedralNorm& phi, double tol_active) {
    require(phi.dim() <= kMaxEnumDim, "inf_laplacian_pair: d <= 4 required");
    auto extrema = [phi, tol_active](const Vec& p, const SymMatrix& X) {
        require_dim(p, phi.dim(), "inf_laplacian_pair");
        require(X.dim() == phi.dim(), "inf_laplacian_pair: matrix dimension mismatch");
        if (p.norm() == 0.0) return quad_extrema_over_polytope(X, phi.primal_vertices(), phi.dim());
        return quad_extrema_over_face(X, dual_subdifferential(phi, p, tol_active));
    };
    OperatorPair pair;
    pair.upper = [extrema](const Vec& p, const SymMatrix& X) { return extrema(p, X).max; };
    pair.lower = [extrema](const Vec& p, const SymMatrix& X) { return extrema(p, X).min; };
    pair.label = "inf-laplacian:" + phi.name();
    pair.norm_ref = phi;
    return pair;
}

OperatorPair F_median_pair(const EdgeSet& E, double tol) {
    OperatorPair pair;
    pair.upper = [E, tol](const Vec& p, const SymMatrix& X) {
        check_pair_input(E, p, X);
        return extrema_over(E, index_sets(E, p, tol).L, X).second;
    };
    pair.lower = [E, tol](const Vec& p, const SymMatrix& X) {
        check_pair_input(E, p, X);
        return extrema_over(E, index_sets(E, p, tol).L, X).first;
    };
    pair.label = "median:" + E.name();
    return pair;
}

OperatorPair F_infty_pair(const EdgeSet& E, double tol) {
    OperatorPair pair;
    pair.upper = [E, tol](const Vec& p, const SymMatrix& X) {
        check_pair_input(E, p, X);
        return extrema_over(E, index_sets(E, p, tol).J, X).second;
    };
    pair.lower = [E, tol](const Vec& p, const SymMatrix& X) {
        check_pair_input(E, p, X);
        return extrema_over(E, index_sets(E, p, tol).J, X).first;
    };
    pair.label = "infty:" + E.name();
    return pair;
}

OperatorPair F_alpha_pair(const EdgeSet& E, double alpha, double tol) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw InputError("F_alpha_pair: alpha must lie in (1, inf)");
    // Returns {lower, upper}.
    auto eval = [E, alpha, tol](const Vec& p, const SymMatrix& X) -> std::pair<double, double> {
        check_pair_input(E, p, X);
        const double pn = p.norm();
        std::vector<double> ip(static_cast<size_t>(E.size()));
        bool any_zero = false;
        for (int i = 0; i < E.size(); ++i) {
            ip[i] = std::abs(p.dot(E[i]));
            if (ip[i] <= tol * pn * E[i].norm()) {
                ip[i] = 0.0;
                any_zero = true;
            }
        }
        if (any_zero && alpha < 2.0) return extrema_over(E, index_sets(E, p, tol).L, X);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < E.size(); ++i) {
            double w;
            if (alpha == 2.0)
                w = 1.0;
            else if (ip[i] == 0.0)
                w = 0.0;
            else
                w = std::pow(ip[i], alpha - 2.0);
            num += w * X.quad(E[i]);
            den += w;
        }
        if (den == 0.0) {
            std::vector<int> all(static_cast<size_t>(E.size()));
            for (int i = 0; i < E.size(); ++i) all[i] = i;
            return extrema_over(E, all, X);
        }
        return {num / den, num / den};
    };
    OperatorPair pair;
    pair.upper = [eval](const Vec& p, const SymMatrix& X) { return eval(p, X).second; };
    pair.lower = [eval](const Vec& p, const SymMatrix& X) { return eval(p, X).first; };
    std::ostringstream label;
    label << "alpha:" << alpha << ":" << E.name();
    pair.label = label.str();
    return pair;
}

// ---------------------------------------------------------------------------

double derived_dual_norm(const EdgeSet& E, const Vec& p) {
    require_dim(p, E.dim(), "derived_dual_norm");
    require(E.size() >= 4, "derived_dual_norm: needs #E >= 4");
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < E.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < E.size(); ++j)
            if (j != i && j != E.opposite(i)) s += std::abs(p.dot(E[j]));
        best = std::max(best, s);
    }
    return best;
}

namespace {

// One representative index per +-pair.
std::vector<int> pair_representatives(const EdgeSet& E) {
    std::vector<int> reps;
    for (int i = 0; i < E.size(); ++i)
        if (i < E.opposite(i)) reps.push_back(i);
    return reps;
}

// Sums with coefficients in `coeffs` on every pair except the excluded one.
std::vector<Vec> signed_pair_sums(const EdgeSet& E, const std::vector<double>& coeffs) {
    require(E.size() <= 16, "tilde_E: #E <= 16 required");
    const std::vector<int> reps = pair_representatives(E);
    const int K = static_cast<int>(reps.size());
    const int nc = static_cast<int>(coeffs.size());
    std::map<std::vector<long long>, Vec> uniq;
    for (int skip = 0; skip < K; ++skip) {
        std::vector<int> rest;
        for (int k = 0; k < K; ++k)
            if (k != skip) rest.push_back(reps[k]);
        long long total = 1;
        for (size_t k = 0; k < rest.size(); ++k) total *= nc;
        for (long long code = 0; code < total; ++code) {
            Vec v = Vec::Zero(E.dim());
            long long c = code;
            for (int idx : rest) {
                v += coeffs[static_cast<size_t>(c % nc)] * E[idx];
                c /= nc;
            }
            std::vector<long long> key(static_cast<size_t>(E.dim()));
            for (int i = 0; i < E.dim(); ++i) key[i] = std::llround(v[i] * 1e9);
            uniq.emplace(std::move(key), v);
        }
    }
    std::vector<Vec> out;
    for (auto& kv : uniq) out.push_back(kv.second);
    return out;
}

}  // namespace

std::vector<Vec> tilde_E(const EdgeSet& E) { return signed_pair_sums(E, {-2.0, 0.0, 2.0}); }

std::vector<Vec> tilde_E_active(const EdgeSet& E, const Vec& p, double tol) {
    require_dim(p, E.dim(), "tilde_E_active");
    const std::vector<Vec> all = tilde_E(E);
    double best = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (const Vec& q : all) {
        best = std::max(best, p.dot(q));
        scale = std::max(scale, q.norm());
    }
    std::vector<Vec> out;
    for (const Vec& q : all)
        if (p.dot(q) >= best - tol * p.norm() * std::max(1.0, scale)) out.push_back(q);
    return out;
}

PolyhedralNorm derived_norm(const EdgeSet& E) {
    // Points with a zero coefficient are midpoints, never extreme.
    PolyhedralNorm dual(signed_pair_sums(E, {-2.0, 2.0}), "derived-dual:" + E.name());
    PolyhedralNorm n = dual.dual();
    return n;
}

PolyhedralNorm edge_norm(const EdgeSet& E) {
    return PolyhedralNorm(E.edges(), "edge-dual:" + E.name()).dual();
}

// ---------------------------------------------------------------------------

CompatibilityReport compatibility_check(const OperatorPair& pair, const PolyhedralNorm& phi, const Vec& p,
                                        int n_samples, double tol, Rng& rng, double tol_active) {
    require_dim(p, phi.dim(), "compatibility_check");
    require(p.norm() > 0, "compatibility_check: p must be nonzero");
    const std::vector<SymMatrix> basis = matrix_space_basis(phi, p, tol_active);
    CompatibilityReport rep;
    rep.space_dim = static_cast<int>(basis.size());
    rep.worst = SymMatrix::zero(phi.dim());
    auto check = [&](const SymMatrix& X) {
        const double v = std::abs(pair.upper(p, X) - pair.lower(p, X)) / (1.0 + X.norm());
        ++rep.checks;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            rep.worst = X;
        }
    };
    for (const SymMatrix& B : basis) check(B);
    for (int s = 0; s < n_samples && !basis.empty(); ++s) {
        SymMatrix X = SymMatrix::zero(phi.dim());
        for (const SymMatrix& B : basis) X = X + rng.normal() * B;
        check(X);
    }
    rep.pass = rep.max_violation <= tol;
    return rep;
}

OperatorPair operator_by_name(const std::string& spec, int dim) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() == 2 && parts[0] == "inf-laplacian") return inf_laplacian_pair(builtin_norm(parts[1], dim));
    if (parts.size() == 2 && parts[0] == "median") return F_median_pair(builtin_edges(parts[1]));
    if (parts.size() == 2 && parts[0] == "infty") return F_infty_pair(builtin_edges(parts[1]));
    if (parts.size() == 3 && parts[0] == "alpha") {
        double a = 0.0;
        try {
            a = std::stod(parts[1]);
        } catch (const std::exception&) {
            throw InputError("operator_by_name: bad alpha in '" + spec + "'");
        }
        return F_alpha_pair(builtin_edges(parts[2]), a);
    }
    throw InputError("operator_by_name: cannot parse '" + spec + "'");
}

}  // namespace finslab
