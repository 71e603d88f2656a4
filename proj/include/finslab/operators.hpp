#pragma once

#include "finslab/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace finslab {

using Evaluator = std::function<double(const Vec&, const SymMatrix&)>;

struct OperatorPair {
    Evaluator upper;
    Evaluator lower;
    std::string label;
    std::optional<PolyhedralNorm> norm_ref;
};

/// Finite symmetric edge set E in physical coordinates.
class EdgeSet {
public:
    explicit EdgeSet(std::vector<Vec> edges, std::string name = "");

    int dim() const { return static_cast<int>(edges_[0].size()); }
    int size() const { return static_cast<int>(edges_.size()); }
    const std::vector<Vec>& edges() const { return edges_; }
    const Vec& operator[](int i) const { return edges_[static_cast<size_t>(i)]; }
    const std::string& name() const { return name_; }
    /// Index of -e for every edge e.
    int opposite(int i) const { return opposite_[static_cast<size_t>(i)]; }

private:
    std::vector<Vec> edges_;
    std::vector<int> opposite_;
    std::string name_;
};

/// "z2", "z3", "z<d>" (standard unit edges), "z2-diag" (8 king moves),
/// "triangular" (6 nearest neighbours of the triangular lattice).
EdgeSet builtin_edges(const std::string& name);

struct QuadExtrema {
    double min = 0.0;
    double max = 0.0;
    Vec argmin;
    Vec argmax;
};

/// Exact extrema of q -> <Xq, q> over conv(face.vertices). Requires dim <= 3.
QuadExtrema quad_extrema_over_face(const SymMatrix& X, const SubdifferentialFace& face);

/// Same over conv(points) with a caller-chosen dimension cap.
QuadExtrema quad_extrema_over_polytope(const SymMatrix& X, const std::vector<Vec>& points,
                                       int max_dim);

struct IndexSets {
    std::vector<int> J;  // argmax <p, e>
    std::vector<int> L;  // argmin |<p, e>|
};

IndexSets index_sets(const EdgeSet& E, const Vec& p, double tol = kTolActive);

OperatorPair inf_laplacian_pair(const PolyhedralNorm& phi, double tol_active = kTolActive);
OperatorPair F_median_pair(const EdgeSet& E, double tol = kTolActive);
OperatorPair F_infty_pair(const EdgeSet& E, double tol = kTolActive);
OperatorPair F_alpha_pair(const EdgeSet& E, double alpha, double tol = kTolActive);

/// Max over e in E of the sum of |<p, e'>| over e' outside {e, -e}.
double derived_dual_norm(const EdgeSet& E, const Vec& p);

/// Signed sums excluding one +-pair, deduplicated.
std::vector<Vec> tilde_E(const EdgeSet& E);
std::vector<Vec> tilde_E_active(const EdgeSet& E, const Vec& p, double tol = kTolActive);

/// The norm whose dual is derived_dual_norm(E, .).
PolyhedralNorm derived_norm(const EdgeSet& E);
/// phi_E, the norm with dual p -> max_e <p, e>.
PolyhedralNorm edge_norm(const EdgeSet& E);

struct CompatibilityReport {
    double max_violation = 0.0;  // max |upper - lower| / (1 + ||X||)
    int checks = 0;
    int space_dim = 0;
    SymMatrix worst;
    bool pass = true;
};

/// Checks upper == lower on every basis matrix of S(p, phi) and on
/// `n_samples` random combinations of them.
CompatibilityReport compatibility_check(const OperatorPair& pair, const PolyhedralNorm& phi,
                                        const Vec& p, int n_samples, double tol, Rng& rng,
                                        double tol_active = kTolActive);

/// Resolves "inf-laplacian:<norm>", "median:<edges>", "alpha:<v>:<edges>",
/// "infty:<edges>" with built-in norm/edge names. `dim` is used for norms.
OperatorPair operator_by_name(const std::string& spec, int dim);

}  // namespace finslab
