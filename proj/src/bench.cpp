#include "finslab/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace finslab {

namespace {

using V2 = Eigen::Vector2d;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cross(const V2& a, const V2& b) { return a.x() * b.y() - a.y() * b.x(); }

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Planar gauge on raw generators, avoiding Vec allocations in hot loops.
struct Gauge2 {
    std::vector<V2> gens;
    std::vector<V2> primal;

    explicit Gauge2(const PolyhedralNorm& phi) {
        require(phi.dim() == 2, "planar gauge: norm must be two-dimensional");
        for (const Vec& p : phi.generators()) gens.emplace_back(p[0], p[1]);
        for (const Vec& v : phi.primal_vertices()) primal.emplace_back(v[0], v[1]);
    }

    double operator()(const V2& q) const {
        double m = -std::numeric_limits<double>::infinity();
        for (const V2& p : gens) m = std::max(m, p.dot(q));
        return m;
    }

    // min over t in [0, 1] of phi(w - t s); convex and piecewise linear in t with
    // kinks where w - t s crosses a primal vertex ray.
    double segment_min(const V2& w, const V2& s) const {
        double best = std::min((*this)(w), (*this)(w - s));
        for (const V2& v : primal) {
            const double den = cross(s, v);
            if (den == 0.0) continue;
            const double t = cross(w, v) / den;
            if (t > 0.0 && t < 1.0) best = std::min(best, (*this)(w - t * s));
        }
        return best;
    }
};

V2 to2(const Vec& x) {
    require_dim(x, 2, "planar point");
    return {x[0], x[1]};
}

Vec from2(const V2& x) {
    Vec v(2);
    v << x.x(), x.y();
    return v;
}

std::string fmt(double x) { return format_double(x); }

}  // namespace

void BenchReport::check_le(const std::string& what, double value, double tolerance) {
    checks.push_back({what, value, tolerance, value <= tolerance});
}

void BenchReport::check_true(const std::string& what, bool ok) {
    checks.push_back({what, ok ? 1.0 : 0.0, 1.0, ok});
}

bool BenchReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

// ---------------------------------------------------------------- ordering

BenchReport ordering_test(const Scheme& scheme, const Field& w0, const Field& v0, int steps) {
    require(steps >= 0, "ordering_test: steps must be nonnegative");
    require(w0.size() == v0.size() && w0.size() == static_cast<size_t>(scheme.sites()),
            "ordering_test: fields do not match the window");
    for (size_t s = 0; s < w0.size(); ++s)
        require(w0.values[s] <= v0.values[s], "ordering_test: w0 <= v0 is violated at the start");
    Timer timer;
    BenchReport rep;
    rep.name = "ordering";
    rep.config = {{"alpha", format_alpha(scheme.config().alpha)},
                  {"edges", scheme.config().edges.name()},
                  {"steps", std::to_string(steps)}};
    rep.table.columns = {"step", "violations", "min_gap"};
    Field w = w0, v = v0;
    long long total = 0;
    for (int n = 0; n <= steps; ++n) {
        if (n > 0) {
            w = scheme.step(w);
            v = scheme.step(v);
        }
        long long bad = 0;
        double gap = std::numeric_limits<double>::infinity();
        for (size_t s = 0; s < w.size(); ++s) {
            const double g = v.values[s] - w.values[s];
            if (g < 0.0) ++bad;
            gap = std::min(gap, g);
        }
        total += bad;
        rep.table.add_row((RowBuilder() << n << bad << gap).take());
    }
    rep.check_le("violations", static_cast<double>(total), 0.0);
    rep.runtime_s = timer.seconds();
    return rep;
}

BenchReport ordering_suite(const OrderingOptions& opt) {
    require(opt.pairs >= 1 && opt.n >= 3 && opt.steps >= 0, "ordering_suite: bad options");
    Timer timer;
    BenchReport rep;
    rep.name = "ordering";
    std::string alphas;
    for (double a : opt.alphas) alphas += (alphas.empty() ? "" : ";") + format_alpha(a);
    rep.config = {{"alphas", alphas},         {"edges", opt.edges},
                  {"n", std::to_string(opt.n)}, {"pairs", std::to_string(opt.pairs)},
                  {"seed", std::to_string(opt.seed)}, {"steps", std::to_string(opt.steps)}};
    rep.table.columns = {"alpha", "pair", "violations", "min_gap_initial", "min_gap_final", "max_gap_final"};

    const EdgeSet E = builtin_edges(opt.edges);
    SchemeConfig cfg{builtin_lattice(opt.edges == "triangular" ? "triangular" : "z" + std::to_string(E.dim())), E};
    cfg.window.assign(static_cast<size_t>(E.dim()), opt.n);
    cfg.boundary = Boundary::periodic;
    cfg.eps = 1.0 / opt.n;

    Rng rng(opt.seed);
    for (double alpha : opt.alphas) {
        cfg.alpha = alpha;
        const Scheme scheme(cfg);
        long long alpha_total = 0;
        for (int k = 0; k < opt.pairs; ++k) {
            Field w{cfg.window, std::vector<double>(static_cast<size_t>(scheme.sites()))};
            Field v = w;
            for (size_t s = 0; s < w.size(); ++s) {
                w.values[s] = rng.uniform(-1.0, 1.0);
                const double r = rng.uniform();
                v.values[s] = w.values[s] + (r < 0.25 ? 0.0 : 0.5 * rng.uniform());
            }
            double gap0 = std::numeric_limits<double>::infinity();
            for (size_t s = 0; s < w.size(); ++s) gap0 = std::min(gap0, v.values[s] - w.values[s]);
            long long bad = 0;
            for (int n = 0; n < opt.steps; ++n) {
                w = scheme.step(w);
                v = scheme.step(v);
                for (size_t s = 0; s < w.size(); ++s) bad += v.values[s] < w.values[s];
            }
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (size_t s = 0; s < w.size(); ++s) {
                lo = std::min(lo, v.values[s] - w.values[s]);
                hi = std::max(hi, v.values[s] - w.values[s]);
            }
            alpha_total += bad;
            rep.table.add_row((RowBuilder() << format_alpha(alpha) << k << bad << gap0 << lo << hi).take());
        }
        rep.check_le("violations alpha=" + format_alpha(alpha), static_cast<double>(alpha_total), 0.0);
    }
    rep.runtime_s = timer.seconds();
    return rep;
}

// ------------------------------------------------------------- calibration

namespace {

OperatorPair calibration_operator(const EdgeSet& E, double alpha) {
    if (alpha == 1.0) return F_median_pair(E);
    if (std::isinf(alpha)) return F_infty_pair(E);
    return F_alpha_pair(E, alpha);
}

Lattice lattice_for(const EdgeSet& E) {
    if (E.name() == "triangular") return builtin_lattice("triangular");
    return builtin_lattice("z" + std::to_string(E.dim()));
}

}  // namespace

double calibration_increment(const Lattice& lat, const EdgeSet& E, double alpha, const Vec& p,
                             const SymMatrix& X, double eps) {
    const int d = lat.dim();
    SchemeConfig cfg{lat, E};
    cfg.alpha = alpha;
    cfg.window.assign(static_cast<size_t>(d), 3);
    cfg.boundary = Boundary::frozen;
    cfg.eps = eps;
    cfg.steps = 1;
    // Shift the datum so the centre site sits at its origin.
    const Vec centre = eps * lat.basis * Vec::Ones(d);
    const InitialDatum q{"quadratic", [p, X, centre](const Vec& x) {
                             const Vec y = x - centre;
                             return p.dot(y) + 0.5 * X.quad(y);
                         }};
    const Scheme scheme(cfg, &q);
    const Field u0 = scheme.sample(q);
    const Field u1 = scheme.step(u0);
    const int mid = scheme.site_of(IVec::Ones(d));
    return u1.values[static_cast<size_t>(mid)] - u0.values[static_cast<size_t>(mid)];
}

bool calibration_generic(const EdgeSet& E, double alpha, const Vec& p, double margin) {
    const double pn = p.norm();
    if (pn == 0.0) return false;
    std::vector<double> abs_ip, ip;
    for (const Vec& e : E.edges()) {
        const double t = p.dot(e) / e.norm();
        ip.push_back(t);
        abs_ip.push_back(std::abs(t));
    }
    const double gap = margin * pn;
    if (*std::min_element(abs_ip.begin(), abs_ip.end()) < gap) return false;
    auto distinct_gap_ok = [gap](std::vector<double> v, bool from_top) {
        std::sort(v.begin(), v.end());
        if (from_top) std::reverse(v.begin(), v.end());
        const double first = v.front();
        for (double x : v)
            if (x != first && std::abs(x - first) < gap) return false;
        return true;
    };
    if (alpha == 1.0) {
        // Opposite edges share |<p, e>|; any other tie or near-tie is rejected.
        std::vector<double> a = abs_ip;
        std::sort(a.begin(), a.end());
        const double smallest = a.front();
        int count = 0;
        for (double x : a) {
            if (std::abs(x - smallest) <= 1e-12 * pn) ++count;
            else if (x - smallest < gap) return false;
        }
        return count == 2;
    }
    if (std::isinf(alpha)) {
        const double top = *std::max_element(ip.begin(), ip.end());
        return std::count_if(ip.begin(), ip.end(), [&](double x) { return x == top; }) == 1 &&
               distinct_gap_ok(ip, true);
    }
    return true;
}

CalibrationResult calibration_oracle(const EdgeSet& E, double alpha, int trials, Rng& rng,
                                     const std::vector<double>& eps) {
    require(trials >= 2, "calibration_oracle: need at least two trials");
    require(!eps.empty(), "calibration_oracle: eps ladder is empty");
    for (double e : eps) require(e > 0.0 && e <= 0.05, "calibration_oracle: eps must lie in (0, 0.05]");
    Timer timer;
    const int d = E.dim();
    const Lattice lat = lattice_for(E);
    const OperatorPair op = calibration_operator(E, alpha);

    CalibrationResult res;
    BenchReport& rep = res.report;
    rep.name = "calibration";
    std::string ladder;
    for (double e : eps) ladder += (ladder.empty() ? "" : ";") + fmt(e);
    rep.config = {{"alpha", format_alpha(alpha)}, {"edges", E.name()}, {"eps", ladder},
                  {"trials", std::to_string(trials)}};
    rep.table.columns = {"trial", "eps", "F", "increment", "ratio"};

    std::vector<double> num(eps.size(), 0.0), den(eps.size(), 0.0);
    std::vector<double> ratios0;
    for (int t = 0; t < trials; ++t) {
        Vec p;
        SymMatrix X;
        double F = 0.0;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw NumericError("calibration_oracle: no generic sample found");
            p = rng.normal_vec(d);
            X = rng.normal_sym(d);
            if (!calibration_generic(E, alpha, p, 0.1)) continue;
            F = op.upper(p, X);
            if (std::abs(F - op.lower(p, X)) > 1e-12 * (1.0 + X.norm())) continue;
            if (std::abs(F) < 0.1 * X.norm()) continue;
            break;
        }
        for (size_t k = 0; k < eps.size(); ++k) {
            const double h = eps[k];
            const double inc = calibration_increment(lat, E, alpha, p, X, h);
            const double model = h * h * F;
            num[k] += inc * model;
            den[k] += model * model;
            if (k == 0) ratios0.push_back(inc / model);
            rep.table.add_row((RowBuilder() << t << h << F << inc << inc / model).take());
        }
    }
    for (size_t k = 0; k < eps.size(); ++k) res.kappa_by_eps.push_back(num[k] / den[k]);
    res.kappa = res.kappa_by_eps.front();
    const auto [lo, hi] = std::minmax_element(ratios0.begin(), ratios0.end());
    res.spread = (*hi - *lo) / std::abs(res.kappa);
    for (double k : res.kappa_by_eps)
        res.eps_drift = std::max(res.eps_drift, std::abs(k - res.kappa) / std::abs(res.kappa));

    rep.checks.push_back({"kappa", res.kappa, 0.0, std::isfinite(res.kappa) && res.kappa > 0.0});
    rep.check_le("relative spread", res.spread, 0.05);
    rep.check_le("eps drift", res.eps_drift, 0.02);
    rep.runtime_s = timer.seconds();
    return res;
}

CalibrationResult calibration_oracle(const CalibrationOptions& opt) {
    Rng rng(opt.seed);
    CalibrationResult res = calibration_oracle(builtin_edges(opt.edges), opt.alpha, opt.trials, rng, opt.eps);
    res.report.config.emplace_back("seed", std::to_string(opt.seed));
    return res;
}

// ------------------------------------------------------------- convergence

BenchReport convergence_test(const ConvergenceOptions& opt) {
    require(opt.n.size() >= 2, "convergence_test: need at least two resolutions");
    require(opt.T > 0.0, "convergence_test: T must be positive");
    for (size_t k = 1; k < opt.n.size(); ++k)
        require(opt.n[k] == 2 * opt.n[k - 1], "convergence_test: resolutions must double");
    Timer timer;
    const EdgeSet E = builtin_edges(opt.edges);
    const int d = E.dim();
    require(opt.edges != "triangular", "convergence_test: needs a cubic lattice");
    InitialDatum u0;
    if (opt.datum == "sine")
        u0 = sine_datum(1.0, 1.0);
    else if (opt.datum == "constant")
        u0 = constant_datum(0.5);
    else
        throw InputError("convergence_test: unknown datum '" + opt.datum + "'");

    BenchReport rep;
    rep.name = "convergence";
    std::string ladder;
    for (int n : opt.n) ladder += (ladder.empty() ? "" : ";") + std::to_string(n);
    rep.config = {{"T", fmt(opt.T)},          {"alpha", format_alpha(opt.alpha)},
                  {"datum", opt.datum},       {"edges", opt.edges},
                  {"n", ladder}};
    rep.table.columns = {"n_coarse", "n_fine", "steps_coarse", "steps_fine", "distance", "ratio"};

    std::vector<Scheme> schemes;
    std::vector<Field> finals;
    std::vector<int> steps;
    for (int n : opt.n) {
        SchemeConfig cfg{builtin_lattice("z" + std::to_string(d)), E};
        cfg.alpha = opt.alpha;
        cfg.window.assign(static_cast<size_t>(d), n);
        cfg.boundary = Boundary::periodic;
        cfg.eps = 1.0 / n;
        cfg.steps = static_cast<int>(std::floor(opt.T * n * static_cast<double>(n) + 1e-9));
        cfg.stride = std::max(1, cfg.steps);
        schemes.emplace_back(cfg);
        const Trajectory traj = evolve(schemes.back(), schemes.back().sample(u0));
        finals.push_back(traj.snapshots.back());
        steps.push_back(cfg.steps);
    }
    std::vector<double> dist;
    for (size_t k = 0; k + 1 < opt.n.size(); ++k) {
        const Scheme& coarse = schemes[k];
        const Scheme& fine = schemes[k + 1];
        double m = 0.0;
        for (int s = 0; s < coarse.sites(); ++s) {
            const int f = fine.site_of(2 * coarse.site_index(s));
            m = std::max(m, std::abs(finals[k].values[static_cast<size_t>(s)] -
                                     finals[k + 1].values[static_cast<size_t>(f)]));
        }
        dist.push_back(m);
        const double ratio = k == 0 ? kNaN : (dist[k - 1] > 0.0 ? m / dist[k - 1] : 0.0);
        rep.table.add_row((RowBuilder() << opt.n[k] << opt.n[k + 1] << steps[k] << steps[k + 1] << m << ratio).take());
    }
    for (size_t k = 1; k < dist.size(); ++k) {
        const double ratio = dist[k - 1] > 0.0 ? dist[k] / dist[k - 1] : (dist[k] > 0.0 ? kNaN : 0.0);
        rep.checks.push_back({"ratio " + std::to_string(opt.n[k]) + "/" + std::to_string(opt.n[k + 1]), ratio,
                              opt.ratio_tol, ratio <= opt.ratio_tol});
    }
    rep.runtime_s = timer.seconds();
    return rep;
}

// ---------------------------------------------------------------- domains

Domain2Poly::Domain2Poly(std::vector<V2> vertices) : v_(std::move(vertices)) {
    const size_t n = v_.size();
    require(n >= 3, "Domain2Poly: need at least three vertices");
    for (const V2& x : v_) require(x.allFinite(), "Domain2Poly: non-finite vertex");
    double area = 0.0;
    for (size_t i = 0; i < n; ++i) area += cross(v_[i], v_[(i + 1) % n]);
    if (std::abs(area) <= 1e-14) throw DegenerateError("Domain2Poly: polygon has zero area");
    if (area < 0.0) std::reverse(v_.begin(), v_.end());
    for (size_t i = 0; i < n; ++i) {
        if ((v_[(i + 1) % n] - v_[i]).norm() == 0.0) throw DegenerateError("Domain2Poly: repeated vertex");
        for (size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;
            const V2 a = v_[i], b = v_[(i + 1) % n], c = v_[j], e = v_[(j + 1) % n];
            const double d1 = cross(b - a, c - a), d2 = cross(b - a, e - a);
            const double d3 = cross(e - c, a - c), d4 = cross(e - c, b - c);
            if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0)
                throw DegenerateError("Domain2Poly: polygon is not simple");
        }
    }
}

bool Domain2Poly::contains(const V2& x) const {
    bool inside = false;
    const size_t n = v_.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const V2& a = v_[i];
        const V2& b = v_[j];
        if ((a.y() > x.y()) != (b.y() > x.y()) &&
            x.x() < (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x())
            inside = !inside;
    }
    return inside && boundary_distance(x) > 1e-12;
}

double Domain2Poly::boundary_distance(const V2& x) const {
    double best = std::numeric_limits<double>::infinity();
    const size_t n = v_.size();
    for (size_t i = 0; i < n; ++i) {
        const V2 a = v_[i], s = v_[(i + 1) % n] - a;
        const double t = std::clamp((x - a).dot(s) / s.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (x - a - t * s).norm());
    }
    return best;
}

std::vector<V2> Domain2Poly::boundary_samples(double h) const {
    require(h > 0.0, "boundary_samples: spacing must be positive");
    std::vector<V2> out;
    const size_t n = v_.size();
    for (size_t i = 0; i < n; ++i) {
        const V2 a = v_[i], b = v_[(i + 1) % n];
        const int m = std::max(1, static_cast<int>(std::ceil((b - a).norm() / h - 1e-9)));
        for (int k = 0; k < m; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / m));
    }
    return out;
}

Domain2Poly Domain2Poly::scaled(double s) const {
    require(s > 0.0, "Domain2Poly::scaled: factor must be positive");
    std::vector<V2> w = v_;
    for (V2& x : w) x *= s;
    return Domain2Poly(std::move(w));
}

std::pair<V2, V2> Domain2Poly::bounds() const {
    V2 lo = v_[0], hi = v_[0];
    for (const V2& x : v_) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    return {lo, hi};
}

Domain2Poly square_domain(double half) {
    require(half > 0.0, "square_domain: half width must be positive");
    return Domain2Poly({{-half, -half}, {half, -half}, {half, half}, {-half, half}});
}

Domain2Poly regular_polygon_domain(int k, double circumradius, double phase) {
    require(k >= 3 && circumradius > 0.0, "regular_polygon_domain: need k >= 3 and a positive radius");
    std::vector<V2> v;
    for (int i = 0; i < k; ++i) {
        const double t = phase + 2.0 * std::numbers::pi * i / k;
        v.emplace_back(circumradius * std::cos(t), circumradius * std::sin(t));
    }
    return Domain2Poly(std::move(v));
}

namespace {

double sampled_distance(const Gauge2& g, const std::vector<V2>& samples, const V2& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const V2& y : samples) best = std::min(best, g(x - y));
    return best;
}

double exact_distance(const Gauge2& g, const std::vector<V2>& verts, const V2& x) {
    double best = std::numeric_limits<double>::infinity();
    const size_t n = verts.size();
    for (size_t i = 0; i < n; ++i) best = std::min(best, g.segment_min(x - verts[i], verts[(i + 1) % n] - verts[i]));
    return best;
}

void require_inside(const Domain2Poly& dom, const V2& x) {
    if (!dom.contains(x)) throw InputError("finsler_distance: point lies outside the domain");
}

}  // namespace

double finsler_distance(const Domain2Poly& dom, const PolyhedralNorm& phi, const Vec& x, double h) {
    const V2 y = to2(x);
    require_inside(dom, y);
    return sampled_distance(Gauge2(phi), dom.boundary_samples(h), y);
}

double finsler_distance_exact(const Domain2Poly& dom, const PolyhedralNorm& phi, const Vec& x) {
    const V2 y = to2(x);
    require_inside(dom, y);
    return exact_distance(Gauge2(phi), dom.vertices(), y);
}

double GridField::at(int i, int j) const {
    const int a = i - i0, b = j - j0;
    if (a < 0 || b < 0 || a >= nx || b >= ny) return kNaN;
    return values[static_cast<size_t>(b) * static_cast<size_t>(nx) + static_cast<size_t>(a)];
}

GridField distance_grid(const Domain2Poly& dom, const PolyhedralNorm& phi, double h, DistanceMethod method) {
    require(h > 0.0, "distance_grid: spacing must be positive");
    const Gauge2 g(phi);
    const auto [lo, hi] = dom.bounds();
    GridField f;
    f.h = h;
    f.i0 = static_cast<int>(std::floor(lo.x() / h));
    f.j0 = static_cast<int>(std::floor(lo.y() / h));
    f.nx = static_cast<int>(std::ceil(hi.x() / h)) - f.i0 + 1;
    f.ny = static_cast<int>(std::ceil(hi.y() / h)) - f.j0 + 1;
    f.values.assign(static_cast<size_t>(f.nx) * static_cast<size_t>(f.ny), kNaN);
    const std::vector<V2> samples = method == DistanceMethod::sampled ? dom.boundary_samples(h) : std::vector<V2>{};
    for (int b = 0; b < f.ny; ++b)
        for (int a = 0; a < f.nx; ++a) {
            const V2 x = f.point(f.i0 + a, f.j0 + b);
            if (!dom.contains(x)) continue;
            f.values[static_cast<size_t>(b) * static_cast<size_t>(f.nx) + static_cast<size_t>(a)] =
                method == DistanceMethod::sampled ? sampled_distance(g, samples, x)
                                                  : exact_distance(g, dom.vertices(), x);
        }
    return f;
}

BenchReport distance_test(const Domain2Poly& dom, const PolyhedralNorm& phi, double h,
                          const std::function<double(const Vec&)>& oracle) {
    Timer timer;
    const Gauge2 g(phi);
    const double lip = phi.lipschitz();
    BenchReport rep;
    rep.name = "distance";
    rep.config = {{"h", fmt(h)}, {"norm", phi.name()}, {"vertices", std::to_string(dom.vertices().size())}};
    rep.table.columns = {"x", "y", "sampled", "exact", "oracle"};

    const GridField f = distance_grid(dom, phi, h, DistanceMethod::sampled);
    double err_exact = 0.0, err_oracle = 0.0, lip_excess = -std::numeric_limits<double>::infinity();
    const int offsets[][2] = {{1, 0}, {0, 1}, {7, 3}, {-5, 11}, {23, -17}};
    for (int b = 0; b < f.ny; ++b)
        for (int a = 0; a < f.nx; ++a) {
            const int i = f.i0 + a, j = f.j0 + b;
            const double d = f.at(i, j);
            if (std::isnan(d)) continue;
            const V2 x = f.point(i, j);
            const double de = exact_distance(g, dom.vertices(), x);
            err_exact = std::max(err_exact, std::abs(d - de));
            const double dor = oracle ? oracle(from2(x)) : kNaN;
            if (oracle) err_oracle = std::max(err_oracle, std::abs(d - dor));
            for (const auto& o : offsets) {
                const double d2 = f.at(i + o[0], j + o[1]);
                if (std::isnan(d2)) continue;
                const V2 dx = x - f.point(i + o[0], j + o[1]);
                lip_excess = std::max(lip_excess, std::abs(d - d2) - std::max(g(dx), g(-dx)));
            }
            if (i % 10 == 0 && j % 10 == 0)
                rep.table.add_row((RowBuilder() << x.x() << x.y() << d << de << dor).take());
        }
    rep.check_le("sampled vs exact", err_exact, lip * h);
    if (oracle) rep.check_le("sampled vs oracle", err_oracle, lip * h);
    rep.check_le("lipschitz excess", lip_excess, 1e-12);

    // Dynamic programming through the boundary of the half-scaled subdomain.
    const Domain2Poly inner = dom.scaled(0.5);
    const std::vector<V2> ring = inner.boundary_samples(h);
    const std::vector<V2> outer = dom.boundary_samples(h);
    std::vector<double> ring_dist;
    for (const V2& y : ring) ring_dist.push_back(sampled_distance(g, outer, y));
    double dp_err = 0.0;
    for (int b = 0; b < f.ny; b += 2)
        for (int a = 0; a < f.nx; a += 2) {
            const int i = f.i0 + a, j = f.j0 + b;
            const V2 x = f.point(i, j);
            if (!inner.contains(x)) continue;
            double best = std::numeric_limits<double>::infinity();
            for (size_t k = 0; k < ring.size(); ++k) best = std::min(best, ring_dist[k] + g(x - ring[k]));
            dp_err = std::max(dp_err, std::abs(best - f.at(i, j)));
        }
    rep.check_le("dynamic programming", dp_err, 2.0 * lip * h);
    rep.runtime_s = timer.seconds();
    return rep;
}

EikonalStats eikonal_stats(const Domain2Poly& dom, const PolyhedralNorm& phi, double h, double ridge_threshold) {
    const GridField f = distance_grid(dom, phi, h, DistanceMethod::exact);
    EikonalStats st;
    Vec D(2);
    for (int b = 0; b < f.ny; ++b)
        for (int a = 0; a < f.nx; ++a) {
            const int i = f.i0 + a, j = f.j0 + b;
            const double c = f.at(i, j);
            if (std::isnan(c)) continue;
            const double xp = f.at(i + 1, j), xm = f.at(i - 1, j), yp = f.at(i, j + 1), ym = f.at(i, j - 1);
            if (std::isnan(xp) || std::isnan(xm) || std::isnan(yp) || std::isnan(ym) ||
                dom.boundary_distance(f.point(i, j)) <= 2.0 * h) {
                ++st.near_boundary;
                continue;
            }
            const double jump = std::max(std::abs((xp - c) - (c - xm)), std::abs((yp - c) - (c - ym))) / h;
            if (jump > ridge_threshold) {
                ++st.ridge;
                continue;
            }
            D << (xp - xm) / (2.0 * h), (yp - ym) / (2.0 * h);
            st.max_residual = std::max(st.max_residual, std::abs(dual_norm_eval(phi, D) - 1.0));
            ++st.evaluated;
        }
    st.constant = st.max_residual / h;
    return st;
}

BenchReport eikonal_residual(const Domain2Poly& dom, const PolyhedralNorm& phi, double h, double constant) {
    Timer timer;
    const EikonalStats st = eikonal_stats(dom, phi, h);
    BenchReport rep;
    rep.name = "eikonal";
    rep.config = {{"h", fmt(h)}, {"norm", phi.name()}, {"vertices", std::to_string(dom.vertices().size())}};
    rep.table.columns = {"evaluated", "ridge", "near_boundary", "max_residual", "constant"};
    rep.table.add_row((RowBuilder() << st.evaluated << st.ridge << st.near_boundary << st.max_residual
                                    << st.constant).take());
    rep.check_true("points evaluated", st.evaluated > 0);
    rep.check_le("residual", st.max_residual, constant * h);
    rep.runtime_s = timer.seconds();
    return rep;
}

// ------------------------------------------------------------------ cones

ConeResult cone_comparison(const std::function<double(const Vec&)>& u, double lip_u, const PolyhedralNorm& phi,
                           const GridBox& V, double h, const Vec& x0, double a, ConeSide side) {
    require(V.i1 > V.i0 + 1 && V.j1 > V.j0 + 1, "cone_comparison: box needs interior points");
    require(a > 0.0 && h > 0.0, "cone_comparison: a and h must be positive");
    const V2 z = to2(x0);
    require(!(z.x() > V.i0 * h && z.x() < V.i1 * h && z.y() > V.j0 * h && z.y() < V.j1 * h),
            "cone_comparison: x0 must lie outside the open box");
    const Gauge2 g(phi);
    const double sgn = side == ConeSide::above ? 1.0 : -1.0;
    double all = -std::numeric_limits<double>::infinity(), ring = all;
    Vec x(2);
    for (int j = V.j0; j <= V.j1; ++j)
        for (int i = V.i0; i <= V.i1; ++i) {
            x << i * h, j * h;
            // Below is the above test for -u.
            const double w = sgn * u(x) - a * g(V2(x[0], x[1]) - z);
            all = std::max(all, w);
            if (i == V.i0 || i == V.i1 || j == V.j0 || j == V.j1) ring = std::max(ring, w);
        }
    ConeResult r;
    r.interior = sgn * all;
    r.boundary = sgn * ring;
    r.violation = all - ring;
    r.tolerance = (lip_u + a * phi.lipschitz()) * h;
    r.pass = r.violation <= r.tolerance;
    return r;
}

BenchReport cone_comparison_test(const PolyhedralNorm& phi, double h, int trials, Rng& rng) {
    require(trials >= 1, "cone_comparison_test: need at least one trial");
    Timer timer;
    BenchReport rep;
    rep.name = "cones";
    rep.config = {{"h", fmt(h)}, {"norm", phi.name()}, {"trials", std::to_string(trials)}};
    rep.table.columns = {"case", "side", "trial", "a", "violation", "tolerance", "result"};
    const Domain2Poly dom = square_domain(1.0);
    const double lip = phi.lipschitz();
    const Gauge2 g(phi);
    const int m = static_cast<int>(std::floor(0.8 / h));

    auto random_box = [&]() {
        GridBox V;
        for (;;) {
            V.i0 = static_cast<int>(rng.integer(-m, m));
            V.i1 = static_cast<int>(rng.integer(-m, m));
            V.j0 = static_cast<int>(rng.integer(-m, m));
            V.j1 = static_cast<int>(rng.integer(-m, m));
            if (V.i0 > V.i1) std::swap(V.i0, V.i1);
            if (V.j0 > V.j1) std::swap(V.j0, V.j1);
            if (V.i1 - V.i0 >= 10 && V.j1 - V.j0 >= 10) return V;
        }
    };
    auto outside = [&](const GridBox& V) {
        for (;;) {
            Vec z(2);
            z << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
            if (!(z[0] >= V.i0 * h && z[0] <= V.i1 * h && z[1] >= V.j0 * h && z[1] <= V.j1 * h)) return z;
        }
    };
    auto record = [&](const std::string& name, ConeSide side, int t, double a, const ConeResult& r) {
        rep.table.add_row((RowBuilder() << name << (side == ConeSide::above ? "above" : "below") << t << a
                                        << r.violation << r.tolerance << r.pass).take());
    };

    const auto dist = [&](const Vec& x) { return exact_distance(g, dom.vertices(), to2(x)); };
    double dist_worst = -std::numeric_limits<double>::infinity(), cone_worst = dist_worst;
    double dist_tol = 0.0, cone_tol = 0.0;
    int dist_above_fail = 0;
    double bump_min = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        const GridBox V = random_box();
        const Vec x0 = outside(V);
        const double a = rng.uniform(0.1, 3.0);
        const ConeResult below = cone_comparison(dist, lip, phi, V, h, x0, a, ConeSide::below);
        record("distance", ConeSide::below, t, a, below);
        if (below.violation - below.tolerance > dist_worst - dist_tol) {
            dist_worst = below.violation;
            dist_tol = below.tolerance;
        }
        const ConeResult above = cone_comparison(dist, lip, phi, V, h, x0, a, ConeSide::above);
        record("distance", ConeSide::above, t, a, above);
        dist_above_fail += above.pass ? 0 : 1;

        const auto cone = [&](const Vec& x) { return g(to2(x) - to2(x0)); };
        for (ConeSide side : {ConeSide::above, ConeSide::below}) {
            const ConeResult r = cone_comparison(cone, lip, phi, V, h, x0, a, side);
            record("cone", side, t, a, r);
            if (r.violation - r.tolerance > cone_worst - cone_tol) {
                cone_worst = r.violation;
                cone_tol = r.tolerance;
            }
        }

        Vec centre(2);
        centre << 0.5 * (V.i0 + V.i1) * h, 0.5 * (V.j0 + V.j1) * h;
        const double radius = 0.5 * std::min(V.i1 - V.i0, V.j1 - V.j0) * h;
        const InitialDatum bump = bump_datum(centre, radius, 1.0);
        // max of 6 s (1 - s^2)^2 at s^2 = 1/5
        const double lip_bump = 6.0 / std::sqrt(5.0) * 0.64 / radius;
        const double small_a = 0.05 * std::min(1.0, radius);
        const ConeResult neg = cone_comparison(bump.eval, lip_bump, phi, V, h, x0, small_a, ConeSide::above);
        record("bump", ConeSide::above, t, small_a, neg);
        bump_min = std::min(bump_min, neg.violation - neg.tolerance);
    }
    rep.checks.push_back({"distance from below", dist_worst, dist_tol, dist_worst <= dist_tol});
    rep.checks.push_back({"cone both sides", cone_worst, cone_tol, cone_worst <= cone_tol});
    rep.checks.push_back({"bump detected", bump_min, 0.0, bump_min > 0.0});
    rep.table.add_row((RowBuilder() << "distance" << "above" << -1 << 0.0 << static_cast<double>(dist_above_fail)
                                    << 0.0 << "info").take());
    rep.runtime_s = timer.seconds();
    return rep;
}

// ------------------------------------------------------------ eigenvalue

double eigen_estimate(const Domain2Poly& dom, const PolyhedralNorm& phi, double h) {
    const GridField f = distance_grid(dom, phi, h, DistanceMethod::sampled);
    double m = 0.0;
    for (double v : f.values)
        if (!std::isnan(v)) m = std::max(m, v);
    if (!(m > 0.0)) throw NumericError("eigen_estimate: no grid point inside the domain");
    return 1.0 / m;
}

BenchReport eigen_test(double h) {
    Timer timer;
    BenchReport rep;
    rep.name = "eigen";
    rep.config = {{"h", fmt(h)}};
    rep.table.columns = {"domain", "norm", "scale", "lambda", "reference"};
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const double sq = eigen_estimate(square_domain(1.0), l1, h);
    const double sq2 = eigen_estimate(square_domain(2.0), l1, h);
    rep.table.add_row((RowBuilder() << "square" << "l1" << 1.0 << sq << 1.0).take());
    rep.table.add_row((RowBuilder() << "square" << "l1" << 2.0 << sq2 << 0.5).take());
    rep.check_le("square", std::abs(sq - 1.0), 2.0 * h);
    rep.check_le("scaling", std::abs(2.0 * sq2 - sq), 2.0 * h);

    const PolyhedralNorm eu = builtin_norm("euclidean-polytope-32", 2);
    const int k = 64;
    const double inradius = std::cos(std::numbers::pi / k);
    const double disc = eigen_estimate(regular_polygon_domain(k), eu, h);
    rep.table.add_row((RowBuilder() << "disk-polygon-64" << eu.name() << 1.0 << disc << 1.0 / inradius).take());
    rep.check_le("disk polygon", std::abs(disc - 1.0 / inradius), 2.0 * h);
    rep.runtime_s = timer.seconds();
    return rep;
}

// ------------------------------------------------------------------ 2D

TwodResult twod_analysis(const PolyhedralNorm& psi, const std::vector<double>& deltas) {
    require(psi.dim() == 2, "twod_analysis: norm must be two-dimensional");
    TwodResult r;
    for (const Vec& v : psi.primal_vertices()) {
        const SubdifferentialFace face = subdifferential(psi, v);
        double diam = 0.0;
        for (const Vec& a : face.vertices)
            for (const Vec& b : face.vertices) diam = std::max(diam, (a - b).norm());
        r.directions.push_back(v.normalized());
        r.diameters.push_back(diam);
        r.diameter_sum += diam;
    }
    std::vector<Vec> gens = psi.generators();
    std::sort(gens.begin(), gens.end(),
              [](const Vec& a, const Vec& b) { return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]); });
    for (size_t i = 0; i < gens.size(); ++i) r.perimeter += (gens[(i + 1) % gens.size()] - gens[i]).norm();
    r.deltas = deltas;
    for (double d : deltas)
        r.counts.push_back(static_cast<int>(
            std::count_if(r.diameters.begin(), r.diameters.end(), [d](double x) { return x > d; })));
    return r;
}

TwodResult twod_analysis_smooth(const std::vector<double>& deltas) {
    TwodResult r;
    r.perimeter = kNaN;
    r.deltas = deltas;
    r.counts.assign(deltas.size(), 0);
    return r;
}

BenchReport twod_report(const TwodResult& r, const std::string& name) {
    BenchReport rep;
    rep.name = "twod";
    rep.config = {{"norm", name}};
    rep.table.columns = {"kind", "index", "x", "y", "value"};
    for (size_t i = 0; i < r.directions.size(); ++i)
        rep.table.add_row((RowBuilder() << "direction" << static_cast<int>(i) << r.directions[i][0]
                                        << r.directions[i][1] << r.diameters[i]).take());
    for (size_t i = 0; i < r.deltas.size(); ++i)
        rep.table.add_row((RowBuilder() << "count" << static_cast<int>(i) << r.deltas[i] << 0.0
                                        << static_cast<double>(r.counts[i])).take());
    rep.table.add_row((RowBuilder() << "sum" << 0 << 0.0 << 0.0 << r.diameter_sum).take());
    rep.table.add_row((RowBuilder() << "perimeter" << 0 << 0.0 << 0.0 << r.perimeter).take());
    if (!r.directions.empty())
        rep.check_le("sum <= perimeter", r.diameter_sum - r.perimeter, 1e-9 * std::max(1.0, r.perimeter));
    bool monotone = true;
    for (size_t i = 1; i < r.deltas.size(); ++i)
        if (r.deltas[i] >= r.deltas[i - 1] && r.counts[i] > r.counts[i - 1]) monotone = false;
    rep.check_true("N(delta) nonincreasing", monotone);
    return rep;
}

}  // namespace finslab
