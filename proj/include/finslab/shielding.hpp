#pragma once

#include "finslab/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace finslab {

/// Cone M_i = {q : phi(q) = <p_i, q>}, spanned by the primal ball vertices on
/// the facet dual to p_i.
struct Region {
    int generator = 0;
    std::vector<Vec> rays;
};

/// Codimension-one cone M_i cap M_j, spanned by `rays` (one ray for d = 2, two
/// for d = 3). `normal` is the unit vector along p_i - p_j.
struct Interface {
    int i = 0;
    int j = 0;
    std::vector<Vec> rays;
    Vec normal;
};

struct RegionDecomposition {
    int dim = 0;
    std::vector<Region> regions;
    std::vector<Interface> interfaces;
};

RegionDecomposition region_decomposition(const PolyhedralNorm& phi);

struct QuadSpec {
    int radial_nodes = 6;      // Gauss nodes per straight segment
    int slice_nodes = 16;      // Gauss nodes per slab between slice events (d = 3)
    int sphere_polar = 48;     // polar nodes of the direction rule (d = 4)
    int sphere_azimuth = 96;   // azimuthal nodes of the direction rule (d = 4)
};

/// f_eps = phi * eta_eps with the bump eta(x) = C_d (1 - |x|^2)^3 on the unit ball.
struct MollifiedGauge {
    PolyhedralNorm base;
    double eps;
    QuadSpec quad;
    std::optional<RegionDecomposition> regions;  // d <= 3
    std::vector<Vec> sphere_dirs;                // direction rule for d = 4
    std::vector<double> sphere_weights;
};

MollifiedGauge make_mollified_gauge(const PolyhedralNorm& phi, double eps, QuadSpec quad = {});

/// Normalizing constant C_d of the bump.
double bump_constant(int d);
/// Mass of eta_eps under the configured quadrature (should be 1).
double mollifier_mass(const MollifiedGauge& g);

double mollified_value(const MollifiedGauge& g, const Vec& q);
/// Mollifier mass of each region M_i around q (indexed like the generators).
std::vector<double> region_weights(const MollifiedGauge& g, const Vec& q);
Vec mollified_gradient(const MollifiedGauge& g, const Vec& q);
SymMatrix mollified_hessian(const MollifiedGauge& g, const Vec& q);

/// Zeroth and first moments of r -> prof(|y - c|^2) over the intersection of
/// the disc |y - c| < rho with the planar cone spanned by a and b (angle < pi).
/// prof(r2) = k (A - B r2)^3; m1 is taken about c. Exposed for testing.
struct DiscSectorMoments {
    double m0 = 0.0;
    Eigen::Vector2d m1 = Eigen::Vector2d::Zero();
};
DiscSectorMoments disc_sector_moments(const Eigen::Vector2d& c, double rho, double k, double A, double B,
                                      const Eigen::Vector2d& a, const Eigen::Vector2d& b, const QuadSpec& quad,
                                      bool want_first_moment);

struct ShieldingReport {
    Vec q;
    Vec grad;
    SymMatrix hess;
    Vec face_point;  // barycenter of the active generators
    double dual_residual = 0.0;        // |phi*(Df) - 1|
    double membership_residual = 0.0;  // ||pi_T X pi_T - X|| / (1 + ||X||)
    double kernel_residual = 0.0;      // max_v ||X v|| / (1 + ||X||)
    bool pass = false;
};

ShieldingReport shielding_verify(const MollifiedGauge& g, const Vec& q, double tol);

/// Largest eps = c 2^-k such that at every sample q on {phi = c} the regions
/// meeting B(q, eps) share a nonzero point.
double eps_c_estimate(const PolyhedralNorm& phi, double c, int samples = 1000, std::uint64_t seed = 1);

/// Gauge of {f_eps <= level}.
struct ApproxNorm {
    MollifiedGauge source;
    double level = 1.0;
    double c = 0.0;
    double margin = 0.0;  // (level - eps * Lip) / c: how far the level set stays from the core
};

ApproxNorm approx_norm(const MollifiedGauge& g, double level, double c);
double approx_norm_eval(const ApproxNorm& psi, const Vec& q);
Vec approx_norm_gradient(const ApproxNorm& psi, const Vec& q);
SymMatrix approx_norm_hessian(const ApproxNorm& psi, const Vec& q, double rel_step = 1e-4);
/// max over random unit e of |level * psi(e) / phi(e) - 1|.
double approx_norm_error(const ApproxNorm& psi, const PolyhedralNorm& phi, int samples, Rng& rng);

/// Closed-form C^2 norm with analytic derivatives.
struct SmoothNorm {
    std::string name;
    int dim = 0;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<SymMatrix(const Vec&)> hessian;
    std::function<Vec(const Vec&)> dual_gradient;
};

/// "euclidean" (any d) or "quartic" (d = 2, 3).
SmoothNorm smooth_norm(const std::string& name, int dim);

struct SelfShieldingReport {
    double residual = 0.0;  // ||D^2 phi(q) D phi*(D phi(q))||
    bool pass = false;
};

SelfShieldingReport c2_self_shielding_check(const SmoothNorm& n, const Vec& q, double tol = 1e-8);

}  // namespace finslab
