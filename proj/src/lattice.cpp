#include "finslab/lattice.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace finslab {

namespace {

// Order-preserving map from doubles to integers (-0.0 and 0.0 coincide).
std::int64_t ordinal(double x) {
    const auto i = std::bit_cast<std::int64_t>(x);
    return i >= 0 ? i : std::numeric_limits<std::int64_t>::min() - i;
}

double from_ordinal(std::int64_t o) {
    return std::bit_cast<double>(o >= 0 ? o : std::numeric_limits<std::int64_t>::min() - o);
}

double median_inplace(std::span<double> v) {
    const size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * v[n / 2 - 1] + 0.5 * v[n / 2];
}

// Smallest double y with S(y) = sum sign(y - x)|y - x|^(alpha-1) >= 0. S is
// nondecreasing in y and nonincreasing in each x as evaluated, which makes the
// returned threshold monotone in every input.
double power_root(std::span<double> v, double alpha, double lo, double hi) {
    const double a = alpha - 1.0;
    const bool use_sqrt = alpha == 1.5;
    double scale = 1.0;
    if (alpha > 2.0) {
        int k = 0;
        std::frexp(hi - lo, &k);
        scale = std::ldexp(1.0, -k);
    }
    auto term = [&](double d) { return use_sqrt ? std::sqrt(d) : std::pow(d * scale, a); };
    auto S = [&](double y) {
        double s = 0.0;
        for (double x : v) {
            const double d = y - x;
            if (d > 0.0) s += term(d);
            else if (d < 0.0) s -= term(-d);
        }
        return s;
    };
    // The order of summation inside S must not depend on the values, so the
    // sorted copy only serves the search for the bracketing pair.
    std::array<double, 64> small;
    std::vector<double> large;
    std::span<double> sorted;
    if (v.size() <= small.size()) {
        sorted = std::span<double>(small.data(), v.size());
    } else {
        large.resize(v.size());
        sorted = large;
    }
    std::copy(v.begin(), v.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    size_t l = 0, h = sorted.size() - 1;  // S(sorted[l]) < 0 <= S(sorted[h])
    while (h - l > 1) {
        const size_t m = (l + h) / 2;
        if (S(sorted[m]) >= 0.0) h = m;
        else l = m;
    }
    lo = sorted[l];
    hi = sorted[h];

    // Newton in y = lo + (hi - lo) t^2 (3 - 2t), which flattens both bracket
    // ends and so removes the branch points there.
    const double len = hi - lo;
    auto map = [&](double t) { return std::clamp(lo + len * t * t * (3.0 - 2.0 * t), lo, hi); };
    double th = 0.5, tlo = 0.0, thi = 1.0;
    double y = map(th), f = 0.0, df = 0.0;
    for (int it = 0; it < 60; ++it) {
        y = map(th);
        const double dy = 6.0 * len * th * (1.0 - th);
        f = 0.0;
        df = 0.0;
        for (double x : v) {
            const double d = y - x;
            const double u = std::abs(d) * scale;
            if (u == 0.0) continue;
            const double t = use_sqrt ? std::sqrt(u) : std::pow(u, a);
            f += d > 0.0 ? t : -t;
            df += a * scale * t / u;
        }
        if (f >= 0.0) thi = th;
        else tlo = th;
        double tn = th - f / (df * dy);
        if (!(tn > tlo && tn < thi)) tn = 0.5 * (tlo + thi);
        const double step = std::abs(tn - th);
        th = tn;
        // Quadratic convergence: once a step is this small, th is at rounding level.
        if (step <= 1e-8 * std::min(th, 1.0 - th) || thi - tlo <= 1e-15) break;
    }
    // map() rounds at the scale of len; the last step taken in y itself lands
    // within a few ulps of y.
    if (f != 0.0 && df > 0.0 && std::isfinite(df)) y = std::clamp(y - f / df, lo, hi);
    // Exact threshold: expand a bracket around y by doubling, then bisect in
    // ordinal space.
    std::int64_t oy = ordinal(std::clamp(y, lo, hi));
    std::int64_t olo, ohi;
    if (S(from_ordinal(oy)) >= 0.0) {
        ohi = oy;
        std::int64_t step = 1;
        for (;;) {
            olo = std::max(ohi - step, ordinal(lo));
            if (olo == ordinal(lo) || S(from_ordinal(olo)) < 0.0) break;
            ohi = olo;
            step *= 2;
        }
    } else {
        olo = oy;
        std::int64_t step = 1;
        for (;;) {
            ohi = std::min(olo + step, ordinal(hi));
            if (ohi == ordinal(hi) || S(from_ordinal(ohi)) >= 0.0) break;
            olo = ohi;
            step *= 2;
        }
    }
    while (ohi - olo > 1) {
        const std::int64_t mid = olo + (ohi - olo) / 2;
        if (S(from_ordinal(mid)) >= 0.0) ohi = mid;
        else olo = mid;
    }
    return from_ordinal(ohi);
}

double m_alpha_inplace(std::span<double> v, double alpha) {
    if (alpha == 1.0) return median_inplace(v);
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (lo == hi) return lo;
    if (std::isinf(alpha)) return 0.5 * lo + 0.5 * hi;
    if (alpha == 2.0) {
        double s = 0.0;
        for (double x : v) s += x;
        return std::clamp(s / static_cast<double>(v.size()), lo, hi);
    }
    return power_root(v, alpha, lo, hi);
}

void check_values(std::span<const double> values, const char* what) {
    if (values.empty()) throw InputError(std::string(what) + ": empty input");
    for (double x : values)
        if (!std::isfinite(x)) throw InputError(std::string(what) + ": non-finite input");
}

}  // namespace

Lattice make_lattice(const Mat& basis) {
    require(basis.rows() == basis.cols() && basis.rows() >= 1, "lattice: basis must be square");
    require(basis.allFinite(), "lattice: basis has non-finite entries");
    const double det = basis.determinant();
    if (!(std::abs(det) > 1e-12 * std::max(1.0, basis.norm())))
        throw DegenerateError("lattice: basis is singular");
    return Lattice{basis};
}

Lattice builtin_lattice(const std::string& name) {
    if (name == "triangular") {
        Mat b(2, 2);
        b << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
        return make_lattice(b);
    }
    if (name.size() >= 2 && name[0] == 'z' && name.find_first_not_of("0123456789", 1) == std::string::npos) {
        const int d = std::stoi(name.substr(1));
        require(d >= 1 && d <= 8, "builtin_lattice: z<d> needs 1 <= d <= 8");
        return make_lattice(Mat::Identity(d, d));
    }
    throw InputError("unknown built-in lattice '" + name + "'");
}

IVec lattice_coordinates(const Lattice& lat, const Vec& v) {
    require_dim(v, lat.dim(), "lattice_coordinates");
    const Vec x = lat.basis.fullPivLu().solve(v);
    IVec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double r = std::round(x[i]);
        if (std::abs(x[i] - r) > 1e-9) throw InputError("edge vector is not a lattice vector");
        out[i] = static_cast<long long>(r);
    }
    return out;
}

long long generation_index(const Lattice& lat, const EdgeSet& E) {
    require(E.dim() == lat.dim(), "generation_check: dimension mismatch");
    const int d = lat.dim();
    const int m = E.size();
    std::vector<IVec> cols;
    for (int k = 0; k < m; ++k) cols.push_back(lattice_coordinates(lat, E[k]));
    // Column-style Hermite elimination: unimodular column operations bring
    // the coordinate matrix to lower-triangular form.
    long long index = 1;
    for (int r = 0; r < d; ++r) {
        for (;;) {
            int piv = -1;
            for (int c = r; c < m; ++c)
                if (cols[static_cast<size_t>(c)][r] != 0 &&
                    (piv < 0 || std::llabs(cols[static_cast<size_t>(c)][r]) <
                                    std::llabs(cols[static_cast<size_t>(piv)][r])))
                    piv = c;
            if (piv < 0) return 0;
            std::swap(cols[static_cast<size_t>(r)], cols[static_cast<size_t>(piv)]);
            bool done = true;
            for (int c = r + 1; c < m; ++c) {
                const long long q = cols[static_cast<size_t>(c)][r] / cols[static_cast<size_t>(r)][r];
                cols[static_cast<size_t>(c)] -= q * cols[static_cast<size_t>(r)];
                if (cols[static_cast<size_t>(c)][r] != 0) done = false;
            }
            if (done) break;
        }
        index *= std::llabs(cols[static_cast<size_t>(r)][r]);
    }
    return index;
}

bool generation_check(const Lattice& lat, const EdgeSet& E) { return generation_index(lat, E) == 1; }

double median(std::span<const double> values) {
    check_values(values, "median");
    std::vector<double> v(values.begin(), values.end());
    return median_inplace(v);
}

double m_alpha(std::span<const double> values, double alpha) {
    check_values(values, "m_alpha");
    if (!(alpha >= 1.0)) throw InputError("m_alpha: alpha must lie in [1, inf]");
    std::vector<double> v(values.begin(), values.end());
    return m_alpha_inplace(v, alpha);
}

double parse_alpha(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return kAlphaInfinity;
    double a = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), a);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("alpha: cannot parse '" + s + "'");
    if (!(a >= 1.0)) throw InputError("alpha must lie in [1, inf]");
    return a;
}

std::string format_alpha(double alpha) {
    if (std::isinf(alpha)) return "inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, alpha);
    return std::string(buf, res.ptr);
}

Boundary parse_boundary(const std::string& s) {
    if (s == "periodic") return Boundary::periodic;
    if (s == "frozen") return Boundary::frozen;
    throw InputError("boundary must be 'periodic' or 'frozen', got '" + s + "'");
}

std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "frozen"; }

InitialDatum constant_datum(double c) {
    return {"constant", [c](const Vec&) { return c; }};
}

InitialDatum linear_datum(const Vec& p) {
    return {"linear", [p](const Vec& x) { return p.dot(x); }};
}

InitialDatum quadratic_datum(const Vec& p, const SymMatrix& X) {
    require(X.dim() == p.size(), "quadratic datum: dimension mismatch");
    return {"quadratic", [p, X](const Vec& x) { return p.dot(x) + 0.5 * X.quad(x); }};
}

InitialDatum sine_datum(double amplitude, double frequency) {
    return {"sine", [amplitude, frequency](const Vec& x) {
                double v = amplitude;
                for (Eigen::Index i = 0; i < x.size(); ++i) v *= std::sin(2.0 * std::numbers::pi * frequency * x[i]);
                return v;
            }};
}

InitialDatum bump_datum(const Vec& center, double radius, double amplitude) {
    require(radius > 0.0, "bump datum: radius must be positive");
    return {"bump", [center, radius, amplitude](const Vec& x) {
                const double t = std::max(0.0, 1.0 - (x - center).squaredNorm() / (radius * radius));
                return amplitude * t * t * t;
            }};
}

void validate(const SchemeConfig& cfg) {
    const int d = cfg.lattice.dim();
    require(cfg.edges.dim() == d, "scheme: edge dimension does not match the lattice");
    require(static_cast<int>(cfg.window.size()) == d, "scheme: window needs one extent per axis");
    for (int n : cfg.window) require(n >= 3, "scheme: window extents must be >= 3");
    require(cfg.eps > 0.0 && std::isfinite(cfg.eps), "scheme: eps must be positive");
    require(cfg.steps >= 0, "scheme: steps must be >= 0");
    require(cfg.stride >= 1, "scheme: stride must be >= 1");
    require(cfg.alpha >= 1.0, "scheme: alpha must lie in [1, inf]");
    for (int k = 0; k < cfg.edges.size(); ++k) lattice_coordinates(cfg.lattice, cfg.edges[k]);
}

Scheme::Scheme(SchemeConfig cfg, const InitialDatum* frozen_datum) : cfg_(std::move(cfg)) {
    validate(cfg_);
    const int d = cfg_.lattice.dim();
    strides_.assign(static_cast<size_t>(d), 1);
    for (int k = d - 2; k >= 0; --k)
        strides_[static_cast<size_t>(k)] = strides_[static_cast<size_t>(k + 1)] * cfg_.window[static_cast<size_t>(k + 1)];
    long long total = 1;
    for (int n : cfg_.window) total *= n;
    require(total <= 50'000'000, "scheme: window too large");
    sites_ = static_cast<int>(total);
    degree_ = cfg_.edges.size();
    for (int k = 0; k < degree_; ++k) offsets_.push_back(lattice_coordinates(cfg_.lattice, cfg_.edges[k]));
    if (cfg_.boundary == Boundary::frozen && frozen_datum == nullptr)
        throw InputError("frozen boundary requires a closed-form initial datum");
    neighbours_.resize(static_cast<size_t>(sites_) * static_cast<size_t>(degree_));
    for (int s = 0; s < sites_; ++s) {
        const IVec idx = site_index(s);
        for (int k = 0; k < degree_; ++k) {
            const IVec nb = idx + offsets_[static_cast<size_t>(k)];
            int t = site_of(nb);
            if (t < 0) {
                ghosts_.push_back(frozen_datum->eval(position(nb)));
                t = -static_cast<int>(ghosts_.size());
            }
            neighbours_[static_cast<size_t>(s) * static_cast<size_t>(degree_) + static_cast<size_t>(k)] = t;
        }
    }
}

IVec Scheme::site_index(int site) const {
    const int d = cfg_.lattice.dim();
    IVec idx(d);
    long long rest = site;
    for (int k = 0; k < d; ++k) {
        idx[k] = rest / strides_[static_cast<size_t>(k)];
        rest %= strides_[static_cast<size_t>(k)];
    }
    return idx;
}

Vec Scheme::position(const IVec& index) const {
    return cfg_.eps * (cfg_.lattice.basis * index.cast<double>());
}

int Scheme::site_of(const IVec& index) const {
    const int d = cfg_.lattice.dim();
    require(index.size() == d, "site_of: dimension mismatch");
    long long s = 0;
    for (int k = 0; k < d; ++k) {
        const long long n = cfg_.window[static_cast<size_t>(k)];
        long long i = index[k];
        if (cfg_.boundary == Boundary::periodic) {
            i %= n;
            if (i < 0) i += n;
        } else if (i < 0 || i >= n) {
            return -1;
        }
        s += i * strides_[static_cast<size_t>(k)];
    }
    return static_cast<int>(s);
}

Field Scheme::sample(const InitialDatum& u0) const {
    Field f;
    f.shape = cfg_.window;
    f.values.resize(static_cast<size_t>(sites_));
    for (int s = 0; s < sites_; ++s) f.values[static_cast<size_t>(s)] = u0.eval(position(s));
    return f;
}

Field Scheme::step(const Field& u) const {
    require(u.values.size() == static_cast<size_t>(sites_), "step: field shape does not match the window");
    Field out;
    out.shape = u.shape;
    out.values.resize(u.values.size());
    std::vector<double> buf(static_cast<size_t>(degree_));
    const int* nb = neighbours_.data();
    for (int s = 0; s < sites_; ++s) {
        for (int k = 0; k < degree_; ++k, ++nb)
            buf[static_cast<size_t>(k)] =
                *nb >= 0 ? u.values[static_cast<size_t>(*nb)] : ghosts_[static_cast<size_t>(-*nb - 1)];
        out.values[static_cast<size_t>(s)] = m_alpha_inplace(buf, cfg_.alpha);
    }
    return out;
}

Field step(const Field& u, const Scheme& scheme) { return scheme.step(u); }

Trajectory evolve(const Scheme& scheme, const Field& u0) {
    const SchemeConfig& cfg = scheme.config();
    Trajectory tr;
    auto record = [&](int n, const Field& f) {
        tr.steps.push_back(n);
        tr.times.push_back(n * cfg.eps * cfg.eps);
        tr.snapshots.push_back(f);
    };
    Field u = u0;
    record(0, u);
    for (int n = 1; n <= cfg.steps; ++n) {
        u = scheme.step(u);
        for (double v : u.values)
            if (!std::isfinite(v)) throw NumericError("evolve: non-finite value at step " + std::to_string(n));
        if (n % cfg.stride == 0 || n == cfg.steps) record(n, u);
    }
    return tr;
}

Trajectory evolve(const SchemeConfig& cfg, const InitialDatum& u0) {
    const Scheme scheme(cfg, cfg.boundary == Boundary::frozen ? &u0 : nullptr);
    return evolve(scheme, scheme.sample(u0));
}

double rescaled_sample(const Trajectory& traj, const Scheme& scheme, const Vec& x, double t) {
    require(!traj.snapshots.empty(), "rescaled_sample: empty trajectory");
    const SchemeConfig& cfg = scheme.config();
    const double e2 = cfg.eps * cfg.eps;
    require(t >= 0.0 && t <= traj.times.back() + 0.5 * e2, "rescaled_sample: t outside the horizon");
    const double n = t / e2;
    size_t best = 0;
    for (size_t i = 1; i < traj.steps.size(); ++i)
        if (std::abs(traj.steps[i] - n) < std::abs(traj.steps[best] - n)) best = i;
    require_dim(x, cfg.lattice.dim(), "rescaled_sample");
    const Vec c = cfg.lattice.basis.fullPivLu().solve(x / cfg.eps);
    IVec idx(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) idx[i] = static_cast<long long>(std::llround(c[i]));
    const int s = scheme.site_of(idx);
    if (s < 0) throw InputError("rescaled_sample: query outside the window");
    return traj.snapshots[best].values[static_cast<size_t>(s)];
}

}  // namespace finslab
