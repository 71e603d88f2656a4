#include "finslab/core.hpp"

#include "finslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace finslab {

namespace {

bool near_equal(const Vec& a, const Vec& b, double rel) {
    return (a - b).norm() <= rel * std::max(1.0, std::max(a.norm(), b.norm()));
}

std::vector<Vec> dedupe(const std::vector<Vec>& pts, double rel) {
    std::vector<Vec> out;
    for (const Vec& p : pts) {
        bool seen = false;
        for (const Vec& q : out)
            if (near_equal(p, q, rel)) {
                seen = true;
                break;
            }
        if (!seen) out.push_back(p);
    }
    return out;
}

// Largest t with t*s*e_k in conv(points), minimized over all k and signs.
double interior_margin(const std::vector<Vec>& pts, int d) {
    const int n = static_cast<int>(pts.size());
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < d; ++k)
        for (double s : {1.0, -1.0}) {
            Mat A = Mat::Zero(d + 1, n + 1);
            for (int j = 0; j < n; ++j) {
                A.col(j).head(d) = pts[j];
                A(d, j) = 1.0;
            }
            A(k, n) = -s;
            Vec b = Vec::Zero(d + 1);
            b[d] = 1.0;
            Vec c = Vec::Zero(n + 1);
            c[n] = -1.0;
            const LpResult r = solve_lp(A, b, c);
            if (r.status != LpStatus::optimal) return 0.0;
            margin = std::min(margin, r.x[n]);
        }
    return margin;
}

int check_points(const std::vector<Vec>& points) {
    require(!points.empty(), "generator list is empty");
    const int d = static_cast<int>(points[0].size());
    require(d >= 1, "generators must have dimension >= 1");
    for (const Vec& p : points) {
        require_dim(p, d, "generators");
        if (!p.allFinite()) throw InputError("generators: non-finite entry");
    }
    return d;
}

}  // namespace

Mat Subspace::projector() const { return finslab::projector(basis, ambient); }

std::vector<Vec> canonical_generators(const std::vector<Vec>& points) {
    const int d = check_points(points);
    std::vector<Vec> pts = dedupe(points, 1e-12);
    const double scale = std::accumulate(pts.begin(), pts.end(), 0.0,
                                         [](double m, const Vec& p) { return std::max(m, p.norm()); });
    if (interior_margin(pts, d) <= 1e-10 * scale)
        throw DegenerateError("generators: 0 is not an interior point of their convex hull");
    std::vector<Vec> out;
    for (size_t i = 0; i < pts.size(); ++i) {
        std::vector<Vec> others;
        others.reserve(pts.size() - 1);
        for (size_t j = 0; j < pts.size(); ++j)
            if (j != i) others.push_back(pts[j]);
        if (!in_convex_hull(others, pts[i], 1e-10)) out.push_back(pts[i]);
    }
    return out;
}

std::vector<Vec> polar_vertices(const std::vector<Vec>& generators) {
    const int d = check_points(generators);
    if (d > kMaxEnumDim)
        throw InputError("vertex enumeration is limited to d <= " + std::to_string(kMaxEnumDim));
    const int n = static_cast<int>(generators.size());
    std::vector<Vec> verts;
    Mat A(d, d);
    const Vec ones = Vec::Ones(d);
    for_each_subset(n, d, [&](const std::vector<int>& idx) {
        for (int r = 0; r < d; ++r) A.row(r) = generators[idx[r]].transpose();
        Eigen::FullPivLU<Mat> lu(A);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) return;
        const Vec q = lu.solve(ones);
        for (const Vec& p : generators)
            if (p.dot(q) > 1.0 + 1e-9) return;
        verts.push_back(q);
    });
    return dedupe(verts, 1e-9);
}

PolyhedralNorm::PolyhedralNorm(std::vector<Vec> points, std::string name)
    : name_(std::move(name)) {
    generators_ = canonical_generators(points);
    dim_ = static_cast<int>(generators_[0].size());
    for (const Vec& p : generators_) lip_ = std::max(lip_, p.norm());
    symmetric_ = std::all_of(generators_.begin(), generators_.end(), [&](const Vec& p) {
        return std::any_of(generators_.begin(), generators_.end(),
                           [&](const Vec& q) { return near_equal(p, -q, 1e-12); });
    });
    if (dim_ <= kMaxEnumDim) primal_ = polar_vertices(generators_);
}

const std::vector<Vec>& PolyhedralNorm::primal_vertices() const {
    if (dim_ > kMaxEnumDim)
        throw InputError("dual norm requires d <= " + std::to_string(kMaxEnumDim));
    return primal_;
}

PolyhedralNorm PolyhedralNorm::dual() const {
    PolyhedralNorm out;
    out.dim_ = dim_;
    out.generators_ = primal_vertices();
    out.primal_ = generators_;
    out.symmetric_ = symmetric_;
    for (const Vec& p : out.generators_) out.lip_ = std::max(out.lip_, p.norm());
    out.name_ = name_.empty() ? std::string() : name_ + "*";
    return out;
}

double norm_eval(const PolyhedralNorm& phi, const Vec& q) {
    require_dim(q, phi.dim(), "norm_eval");
    double m = -std::numeric_limits<double>::infinity();
    for (const Vec& p : phi.generators()) m = std::max(m, p.dot(q));
    return m;
}

double dual_norm_eval(const PolyhedralNorm& phi, const Vec& p) {
    require_dim(p, phi.dim(), "dual_norm_eval");
    double m = -std::numeric_limits<double>::infinity();
    for (const Vec& v : phi.primal_vertices()) m = std::max(m, v.dot(p));
    return m;
}

SubdifferentialFace exposed_face(const std::vector<Vec>& points, const Vec& direction,
                                 double tol_active) {
    SubdifferentialFace face;
    const double dn = direction.norm();
    if (dn == 0.0) {
        face.vertices = points;
    } else {
        double best = -std::numeric_limits<double>::infinity();
        double scale = 0.0;
        for (const Vec& v : points) {
            best = std::max(best, v.dot(direction));
            scale = std::max(scale, v.norm());
        }
        const double cut = best - tol_active * dn * std::max(1.0, scale);
        for (const Vec& v : points)
            if (v.dot(direction) >= cut) face.vertices.push_back(v);
    }
    std::vector<Vec> diffs;
    for (size_t i = 1; i < face.vertices.size(); ++i)
        diffs.push_back(face.vertices[i] - face.vertices[0]);
    face.affine_basis = orthonormal_span(diffs, static_cast<int>(direction.size()));
    face.dim = static_cast<int>(face.affine_basis.size());
    return face;
}

SubdifferentialFace subdifferential(const PolyhedralNorm& phi, const Vec& q, double tol_active) {
    require_dim(q, phi.dim(), "subdifferential");
    require(tol_active > 0 && tol_active <= 1e-3, "subdifferential: tol_active must lie in (0, 1e-3]");
    return exposed_face(phi.generators(), q, tol_active);
}

SubdifferentialFace dual_subdifferential(const PolyhedralNorm& phi, const Vec& p, double tol_active) {
    require_dim(p, phi.dim(), "dual_subdifferential");
    require(tol_active > 0 && tol_active <= 1e-3, "dual_subdifferential: tol_active must lie in (0, 1e-3]");
    return exposed_face(phi.primal_vertices(), p, tol_active);
}

Subspace tangent_space(const PolyhedralNorm& phi, const Vec& p, double tol_active) {
    Subspace T;
    T.ambient = phi.dim();
    if (p.norm() == 0.0) return T;
    const SubdifferentialFace face = dual_subdifferential(phi, p, tol_active);
    T.basis = orthogonal_complement(face.vertices, phi.dim());
    return T;
}

Subspace matrix_space_support(const PolyhedralNorm& phi, const Vec& p, double tol_active) {
    Subspace V;
    V.ambient = phi.dim();
    if (p.norm() == 0.0) return V;
    std::vector<Vec> gens{p};
    for (const Vec& t : tangent_space(phi, p, tol_active).basis) gens.push_back(t);
    V.basis = orthonormal_span(gens, phi.dim());
    return V;
}

std::vector<SymMatrix> matrix_space_basis(const PolyhedralNorm& phi, const Vec& p, double tol_active) {
    const Subspace V = matrix_space_support(phi, p, tol_active);
    std::vector<SymMatrix> out;
    for (int i = 0; i < V.dim(); ++i)
        for (int j = i; j < V.dim(); ++j) out.push_back(SymMatrix::sym_outer(V.basis[i], V.basis[j]));
    return out;
}

double subspace_residual(const Subspace& V, const SymMatrix& X) {
    require(X.dim() == V.ambient, "subspace_residual: dimension mismatch");
    const Mat P = V.projector();
    return (P * X.mat() * P - X.mat()).norm() / std::max(1.0, X.norm());
}

bool matrix_space_membership(const PolyhedralNorm& phi, const Vec& p, const SymMatrix& X, double tol,
                             double tol_active) {
    require(tol > 0, "matrix_space_membership: tol must be positive");
    return subspace_residual(matrix_space_support(phi, p, tol_active), X) <= tol;
}

bool is_builtin_norm(const std::string& name) {
    return name == "l1" || name == "linf" || name == "rhombic-dodecahedron" ||
           name.rfind("euclidean-polytope-", 0) == 0;
}

PolyhedralNorm builtin_norm(const std::string& name, int dim) {
    require(dim >= 1, "builtin_norm: dimension must be >= 1");
    std::vector<Vec> gens;
    if (name == "l1") {
        require(dim <= 12, "builtin_norm: l1 limited to d <= 12");
        for (int mask = 0; mask < (1 << dim); ++mask) {
            Vec v(dim);
            for (int i = 0; i < dim; ++i) v[i] = (mask >> i & 1) ? -1.0 : 1.0;
            gens.push_back(v);
        }
    } else if (name == "linf") {
        for (int i = 0; i < dim; ++i) {
            gens.push_back(Vec::Unit(dim, i));
            gens.push_back(-Vec::Unit(dim, i));
        }
    } else if (name == "rhombic-dodecahedron") {
        require(dim == 3, "builtin_norm: rhombic-dodecahedron requires d = 3");
        for (int mask = 0; mask < 8; ++mask)
            gens.push_back(Vec{{(mask & 1) ? -1.0 : 1.0, (mask & 2) ? -1.0 : 1.0, (mask & 4) ? -1.0 : 1.0}});
        for (int i = 0; i < 3; ++i) {
            gens.push_back(2.0 * Vec::Unit(3, i));
            gens.push_back(-2.0 * Vec::Unit(3, i));
        }
    } else if (name.rfind("euclidean-polytope-", 0) == 0) {
        require(dim == 2, "builtin_norm: euclidean-polytope-k requires d = 2");
        int k = 0;
        try {
            k = std::stoi(name.substr(19));
        } catch (const std::exception&) {
            throw InputError("builtin_norm: bad polygon order in '" + name + "'");
        }
        require(k >= 2, "builtin_norm: euclidean-polytope-k needs k >= 2");
        for (int j = 0; j < 2 * k; ++j) {
            const double t = std::numbers::pi * j / k;
            gens.push_back(Vec{{std::cos(t), std::sin(t)}});
        }
    } else {
        throw InputError("unknown built-in norm '" + name + "'");
    }
    return PolyhedralNorm(gens, name);
}

}  // namespace finslab
