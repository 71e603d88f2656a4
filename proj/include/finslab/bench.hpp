#pragma once

#include "finslab/lattice.hpp"
#include "finslab/table.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace finslab {

struct Check {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Outcome of one bench run. `config` is echoed into the summary and hashed
/// by the writer; `runtime_s` is reported in the manifest only.
struct BenchReport {
    std::string name;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<Check> checks;
    Table table;
    double runtime_s = 0.0;

    /// Records value <= tolerance.
    void check_le(const std::string& what, double value, double tolerance);
    void check_true(const std::string& what, bool ok);
    bool pass() const;
};

// ---------------------------------------------------------------- ordering

/// Runs both fields through the scheme and counts, per step, the sites with
/// w > v. Requires w0 <= v0.
BenchReport ordering_test(const Scheme& scheme, const Field& w0, const Field& v0, int steps);

struct OrderingOptions {
    std::vector<double> alphas{1.0, 1.5, 2.0, kAlphaInfinity};
    int pairs = 50;
    int n = 64;
    int steps = 500;
    std::string edges = "z2";
    std::uint64_t seed = 1;
};

/// Random ordered pairs on an n^2 torus: w0 uniform in [-1, 1], v0 = w0 plus a
/// nonnegative gap that vanishes on about a quarter of the sites.
BenchReport ordering_suite(const OrderingOptions& opt);

// ------------------------------------------------------------- calibration

/// One frozen-boundary step on a 3^d window around the origin for the datum
/// <p, x> + <Xx, x>/2; returns the increment at the origin.
double calibration_increment(const Lattice& lat, const EdgeSet& E, double alpha, const Vec& p,
                             const SymMatrix& X, double eps);

/// True when p keeps a distance margin * |p| from the operator's
/// discontinuity set: |<p, e>| >= margin |p| for every edge, plus a unique
/// smallest |<p, e>| pair (alpha = 1) or a unique argmax (alpha = inf).
bool calibration_generic(const EdgeSet& E, double alpha, const Vec& p, double margin);

struct CalibrationOptions {
    std::string edges = "z2";
    double alpha = 1.0;
    int trials = 20;
    std::vector<double> eps{0.02, 0.01, 0.005};
    std::uint64_t seed = 1;
};

struct CalibrationResult {
    double kappa = 0.0;  // least-squares fit at eps[0]
    double spread = 0.0;  // (max - min) / |kappa| of the per-trial ratios
    double eps_drift = 0.0;  // max relative change of the fit across eps
    std::vector<double> kappa_by_eps;
    BenchReport report;
};

CalibrationResult calibration_oracle(const EdgeSet& E, double alpha, int trials, Rng& rng,
                                     const std::vector<double>& eps = {0.02, 0.01, 0.005});
CalibrationResult calibration_oracle(const CalibrationOptions& opt);

// ------------------------------------------------------------- convergence

struct ConvergenceOptions {
    std::string edges = "z2";
    double alpha = 1.0;
    double T = 0.05;
    std::vector<int> n{32, 64, 128};  // torus sites per axis, eps = 1/n
    std::string datum = "sine";        // "sine" or "constant"
    double ratio_tol = 0.8;
};

/// Sup distance between consecutive resolutions at time T (coarse site k
/// against fine site 2k) and the ratios of consecutive distances.
BenchReport convergence_test(const ConvergenceOptions& opt);

// ---------------------------------------------------------------- domains

/// Bounded open polygon, vertices counter-clockwise.
class Domain2Poly {
public:
    explicit Domain2Poly(std::vector<Eigen::Vector2d> vertices);

    const std::vector<Eigen::Vector2d>& vertices() const { return v_; }
    bool contains(const Eigen::Vector2d& x) const;
    /// Euclidean distance to the boundary.
    double boundary_distance(const Eigen::Vector2d& x) const;
    /// Points on every edge with spacing <= h, vertices included.
    std::vector<Eigen::Vector2d> boundary_samples(double h) const;
    Domain2Poly scaled(double s) const;
    /// Bounding box corners.
    std::pair<Eigen::Vector2d, Eigen::Vector2d> bounds() const;

private:
    std::vector<Eigen::Vector2d> v_;
};

/// (-half, half)^2.
Domain2Poly square_domain(double half = 1.0);
/// Regular k-gon with the given circumradius and a vertex at angle `phase`.
Domain2Poly regular_polygon_domain(int k, double circumradius = 1.0, double phase = 0.0);

/// min over boundary samples (spacing h) of phi(x - y). Throws InputError
/// unless x lies in the domain.
double finsler_distance(const Domain2Poly& dom, const PolyhedralNorm& phi, const Vec& x, double h);
/// Same infimum taken exactly over each edge.
double finsler_distance_exact(const Domain2Poly& dom, const PolyhedralNorm& phi, const Vec& x);

/// Values on the points (i h, j h) of the bounding box; NaN outside the domain.
struct GridField {
    double h = 0.0;
    int i0 = 0, j0 = 0;  // index of the first column/row
    int nx = 0, ny = 0;
    std::vector<double> values;  // row-major, x fastest

    double at(int i, int j) const;  // absolute indices, NaN when out of range
    Eigen::Vector2d point(int i, int j) const { return {i * h, j * h}; }
};

enum class DistanceMethod { sampled, exact };
GridField distance_grid(const Domain2Poly& dom, const PolyhedralNorm& phi, double h,
                        DistanceMethod method = DistanceMethod::sampled);

/// Sampled distance against an oracle, 1-Lipschitz property and the
/// dynamic-programming identity on the half-scaled subdomain.
BenchReport distance_test(const Domain2Poly& dom, const PolyhedralNorm& phi, double h,
                          const std::function<double(const Vec&)>& oracle = {});

struct EikonalStats {
    double max_residual = 0.0;
    double constant = 0.0;  // max_residual / h
    int evaluated = 0;
    int ridge = 0;  // excluded by one-sided disagreement
    int near_boundary = 0;
};

/// |phi*(D_h d) - 1| with central differences on the exact distance grid.
EikonalStats eikonal_stats(const Domain2Poly& dom, const PolyhedralNorm& phi, double h,
                           double ridge_threshold = 0.1);
BenchReport eikonal_residual(const Domain2Poly& dom, const PolyhedralNorm& phi, double h,
                             double constant = 5.0);

// ------------------------------------------------------------------ cones

enum class ConeSide { above, below };  // CCA, CCB

/// Grid box V = [i0, i1] x [j0, j1] (absolute indices of spacing h).
struct GridBox {
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
};

struct ConeResult {
    double interior = 0.0;  // extremum over the closed box
    double boundary = 0.0;  // extremum over its boundary ring
    double violation = 0.0;  // >= 0, how far the interior beats the boundary
    double tolerance = 0.0;
    bool pass = false;
};

/// Above: max of u - a phi(x - x0) over V against its boundary ring. Below:
/// min of u + a phi(x - x0). Tolerance (lip_u + a Lip(phi)) h.
ConeResult cone_comparison(const std::function<double(const Vec&)>& u, double lip_u,
                           const PolyhedralNorm& phi, const GridBox& V, double h, const Vec& x0,
                           double a, ConeSide side);

/// Distance from below on random boxes, the cone itself both ways and a bump
/// as negative control.
BenchReport cone_comparison_test(const PolyhedralNorm& phi, double h, int trials, Rng& rng);

// ------------------------------------------------------------ eigenvalue

/// 1 / max over the grid of the sampled distance.
double eigen_estimate(const Domain2Poly& dom, const PolyhedralNorm& phi, double h);
BenchReport eigen_test(double h);

// ------------------------------------------------------------------ 2D

struct TwodResult {
    std::vector<Vec> directions;  // unit directions where psi is not differentiable
    std::vector<double> diameters;  // diam of the subdifferential there
    double diameter_sum = 0.0;
    double perimeter = 0.0;  // of the dual ball
    std::vector<double> deltas;
    std::vector<int> counts;  // N(delta)
};

TwodResult twod_analysis(const PolyhedralNorm& psi, const std::vector<double>& deltas);
/// A C^2 norm has no such directions.
TwodResult twod_analysis_smooth(const std::vector<double>& deltas);
BenchReport twod_report(const TwodResult& r, const std::string& name);

}  // namespace finslab
