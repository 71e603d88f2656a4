#pragma once

#include "finslab/types.hpp"

#include <string>
#include <vector>

namespace finslab {

inline constexpr double kTolActive = 1e-9;
inline constexpr int kMaxEnumDim = 4;

/// Polyhedral gauge phi(q) = max_i <p_i, q>, stored through the extreme points
/// p_i of its dual unit ball. For d <= 4 the vertices of the primal ball
/// {phi <= 1} are enumerated once at construction; they are the generators of
/// the dual norm.
class PolyhedralNorm {
public:
    /// Reduces `points` to extreme points and validates 0 as an interior point.
    PolyhedralNorm(std::vector<Vec> points, std::string name = "");

    int dim() const { return dim_; }
    const std::vector<Vec>& generators() const { return generators_; }
    const std::vector<Vec>& primal_vertices() const;
    bool symmetric() const { return symmetric_; }
    const std::string& name() const { return name_; }
    /// Largest Euclidean length of a generator: the Lipschitz constant of phi.
    double lipschitz() const { return lip_; }

    /// The dual norm phi*, whose generators are the primal ball vertices.
    PolyhedralNorm dual() const;

private:
    PolyhedralNorm() = default;

    int dim_ = 0;
    std::vector<Vec> generators_;
    std::vector<Vec> primal_;
    bool symmetric_ = false;
    double lip_ = 0.0;
    std::string name_;
};

struct SubdifferentialFace {
    std::vector<Vec> vertices;
    std::vector<Vec> affine_basis;
    int dim = 0;
};

struct Subspace {
    std::vector<Vec> basis;
    int ambient = 0;

    int dim() const { return static_cast<int>(basis.size()); }
    Mat projector() const;
};

/// Extreme points of conv(points), duplicates removed, input order kept.
std::vector<Vec> canonical_generators(const std::vector<Vec>& points);

/// Enumerates vertices of {q : <p_i, q> <= 1 for all i}. Requires d <= 4.
std::vector<Vec> polar_vertices(const std::vector<Vec>& generators);

double norm_eval(const PolyhedralNorm& phi, const Vec& q);
double dual_norm_eval(const PolyhedralNorm& phi, const Vec& p);

/// dphi(q) as a face of the dual ball.
SubdifferentialFace subdifferential(const PolyhedralNorm& phi, const Vec& q,
                                    double tol_active = kTolActive);
/// dphi*(p) as a face of the primal ball.
SubdifferentialFace dual_subdifferential(const PolyhedralNorm& phi, const Vec& p,
                                         double tol_active = kTolActive);

/// Face of conv(points) exposed by `direction` (all points for direction 0).
SubdifferentialFace exposed_face(const std::vector<Vec>& points, const Vec& direction,
                                 double tol_active);

/// T(p, phi): orthogonal complement of dphi*(p); {0} at p = 0.
Subspace tangent_space(const PolyhedralNorm& phi, const Vec& p, double tol_active = kTolActive);

/// V = <p> + T(p, phi).
Subspace matrix_space_support(const PolyhedralNorm& phi, const Vec& p,
                              double tol_active = kTolActive);

/// Basis {b_i b_j^T + b_j b_i^T}_{i<=j} of S(p, phi); empty at p = 0.
std::vector<SymMatrix> matrix_space_basis(const PolyhedralNorm& phi, const Vec& p,
                                          double tol_active = kTolActive);

/// Relative residual ||pi X pi - X|| / max(1, ||X||) of X against S_V.
double subspace_residual(const Subspace& V, const SymMatrix& X);

bool matrix_space_membership(const PolyhedralNorm& phi, const Vec& p, const SymMatrix& X,
                             double tol, double tol_active = kTolActive);

/// Built-in norms: "l1", "linf" (any d), "euclidean-polytope-<k>" (d = 2,
/// dual ball a regular 2k-gon inscribed in the unit circle),
/// "rhombic-dodecahedron" (d = 3).
PolyhedralNorm builtin_norm(const std::string& name, int dim);
bool is_builtin_norm(const std::string& name);

}  // namespace finslab
