#pragma once

#include "finslab/operators.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace finslab {

inline constexpr double kAlphaInfinity = std::numeric_limits<double>::infinity();

/// Rank-d lattice generated by the columns of `basis`.
struct Lattice {
    Mat basis;

    int dim() const { return static_cast<int>(basis.rows()); }
};

Lattice make_lattice(const Mat& basis);
/// "z<d>" (identity basis) or "triangular".
Lattice builtin_lattice(const std::string& name);

using IVec = Eigen::Matrix<long long, Eigen::Dynamic, 1>;

/// Integer coordinates of `v` in the lattice basis; throws InputError unless
/// every coordinate is within 1e-9 of an integer.
IVec lattice_coordinates(const Lattice& lat, const Vec& v);

/// True iff the integer span of the edges is the whole lattice (index 1).
bool generation_check(const Lattice& lat, const EdgeSet& E);
/// Index of the sublattice spanned by the edges (0 if it has lower rank).
long long generation_index(const Lattice& lat, const EdgeSet& E);

/// Median with the midpoint rule for an even count.
double median(std::span<const double> values);

/// M_alpha of a multiset: median (alpha = 1), midrange (alpha = inf), mean
/// (alpha = 2), otherwise the smallest double y with
/// sum sign(y - v)|y - v|^(alpha - 1) >= 0. Every branch is nondecreasing in
/// each input under floating-point evaluation.
double m_alpha(std::span<const double> values, double alpha);

/// Parses "inf"/"infinity" or a number >= 1.
double parse_alpha(const std::string& s);
std::string format_alpha(double alpha);

enum class Boundary { periodic, frozen };
Boundary parse_boundary(const std::string& s);
std::string to_string(Boundary b);

/// Closed-form initial datum u0(x) on physical positions.
struct InitialDatum {
    std::string name;
    std::function<double(const Vec&)> eval;
};

InitialDatum constant_datum(double c);
InitialDatum linear_datum(const Vec& p);
InitialDatum quadratic_datum(const Vec& p, const SymMatrix& X);
/// amplitude * prod_i sin(2 pi frequency x_i).
InitialDatum sine_datum(double amplitude = 1.0, double frequency = 1.0);
/// amplitude * (1 - |x - center|^2 / radius^2)^3_+.
InitialDatum bump_datum(const Vec& center, double radius, double amplitude = 1.0);

struct SchemeConfig {
    Lattice lattice;
    EdgeSet edges;
    double alpha = 1.0;
    std::vector<int> window{};  // sites per axis
    Boundary boundary = Boundary::periodic;
    double eps = 0.1;
    int steps = 0;
    int stride = 1;  // snapshot stride
};

void validate(const SchemeConfig& cfg);

/// Values on window sites, row-major with the last axis fastest.
struct Field {
    std::vector<int> shape;
    std::vector<double> values;

    size_t size() const { return values.size(); }
};

/// Precomputed neighbour table for a configuration. For the frozen policy the
/// out-of-window neighbours hold the datum at their physical position.
class Scheme {
public:
    Scheme(SchemeConfig cfg, const InitialDatum* frozen_datum = nullptr);

    const SchemeConfig& config() const { return cfg_; }
    int sites() const { return sites_; }
    /// Lattice index of a site.
    IVec site_index(int site) const;
    /// eps * basis * index.
    Vec position(const IVec& index) const;
    Vec position(int site) const { return position(site_index(site)); }
    /// Site holding `index` (wrapped when periodic); -1 outside the window.
    int site_of(const IVec& index) const;

    Field sample(const InitialDatum& u0) const;
    Field step(const Field& u) const;

private:
    SchemeConfig cfg_;
    int sites_ = 0;
    int degree_ = 0;
    std::vector<IVec> offsets_;
    std::vector<int> neighbours_;  // >= 0 site, < 0 ghost -(k + 1)
    std::vector<double> ghosts_;
    std::vector<long long> strides_;
};

Field step(const Field& u, const Scheme& scheme);

struct Trajectory {
    std::vector<int> steps;  // step count of each snapshot
    std::vector<double> times;  // steps * eps^2
    std::vector<Field> snapshots;
};

/// Runs cfg.steps synchronous updates, keeping every `stride`-th field and
/// the last one. Throws NumericError on non-finite values.
Trajectory evolve(const SchemeConfig& cfg, const InitialDatum& u0);
Trajectory evolve(const Scheme& scheme, const Field& u0);

/// u^(n)(site) at the snapshot nearest to t / eps^2 and the site nearest to x / eps.
double rescaled_sample(const Trajectory& traj, const Scheme& scheme, const Vec& x, double t);

}  // namespace finslab
