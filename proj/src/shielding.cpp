#include "finslab/shielding.hpp"

#include "finslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numbers>

namespace finslab {

namespace {

using V2 = Eigen::Vector2d;

double cross(const V2& u, const V2& v) { return u.x() * v.y() - u.y() * v.x(); }

double profile(double k, double A, double B, double r2) {
    const double t = std::max(0.0, A - B * r2);
    return k * t * t * t;
}

int check_mollifier_dim(const MollifiedGauge& g, const char* what) {
    const int d = g.base.dim();
    if (d < 2 || d > 4) throw InputError(std::string(what) + ": requires 2 <= d <= 4");
    return d;
}

// Per-direction walk along the upper envelope of s -> a_i + s b_i on [0, eps].
// Calls seg(i, s0, s1) for each maximal piece.
template <class F>
void ray_envelope(const std::vector<double>& a, const std::vector<double>& b, double eps, F&& seg) {
    const size_t m = a.size();
    double amax = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (size_t i = 0; i < m; ++i) {
        amax = std::max(amax, a[i]);
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    const double tie = 1e-14 * std::max(1.0, scale);
    size_t cur = m;
    for (size_t i = 0; i < m; ++i)
        if (a[i] >= amax - tie && (cur == m || b[i] > b[cur])) cur = i;
    double s = 0.0;
    while (s < eps) {
        size_t next = m;
        double s_next = eps;
        for (size_t j = 0; j < m; ++j) {
            if (b[j] <= b[cur] + tie) continue;
            double sj = (a[cur] - a[j]) / (b[j] - b[cur]);
            sj = std::max(sj, s);
            if (sj < s_next || (sj == s_next && next != m && b[j] > b[next])) {
                s_next = sj;
                next = j;
            }
        }
        if (next == m || s_next >= eps) {
            seg(cur, s, eps);
            return;
        }
        if (s_next > s) seg(cur, s, s_next);
        cur = next;
        s = s_next;
    }
}

struct RayAccum {
    std::vector<double> mass;
    double value = 0.0;
};

RayAccum sphere_integrals(const MollifiedGauge& g, const Vec& q, bool want_value) {
    const int d = g.base.dim();
    const auto& gens = g.base.generators();
    const size_t m = gens.size();
    const double eps = g.eps;
    const double k = bump_constant(d) * std::pow(eps, -d);
    const GaussRule& rule = gauss_rule(g.quad.radial_nodes);
    RayAccum acc;
    acc.mass.assign(m, 0.0);
    std::vector<double> a(m), b(m);
    for (size_t i = 0; i < m; ++i) a[i] = gens[i].dot(q);
    for (size_t n = 0; n < g.sphere_dirs.size(); ++n) {
        const Vec& w = g.sphere_dirs[n];
        const double wt = g.sphere_weights[n];
        for (size_t i = 0; i < m; ++i) b[i] = gens[i].dot(w);
        ray_envelope(a, b, eps, [&](size_t i, double s0, double s1) {
            const double half = 0.5 * (s1 - s0), mid = 0.5 * (s1 + s0);
            double m0 = 0.0, v0 = 0.0;
            for (size_t r = 0; r < rule.x.size(); ++r) {
                const double s = mid + half * rule.x[r];
                const double f = rule.w[r] * half * profile(k, 1.0, 1.0 / (eps * eps), s * s) *
                                 std::pow(s, d - 1);
                m0 += f;
                if (want_value) v0 += f * (a[i] + s * b[i]);
            }
            acc.mass[i] += wt * m0;
            acc.value += wt * v0;
        });
    }
    return acc;
}

void sphere_rule(int d, const QuadSpec& quad, std::vector<Vec>& dirs, std::vector<double>& weights) {
    const GaussRule& pol = gauss_rule(quad.sphere_polar);
    const int naz = quad.sphere_azimuth;
    std::vector<Vec> s2;
    std::vector<double> w2;
    for (size_t i = 0; i < pol.x.size(); ++i) {
        const double z = pol.x[i];
        const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int j = 0; j < naz; ++j) {
            const double t = 2.0 * std::numbers::pi * (j + 0.5) / naz;
            s2.push_back(Vec{{rxy * std::cos(t), rxy * std::sin(t), z}});
            w2.push_back(pol.w[i] * 2.0 * std::numbers::pi / naz);
        }
    }
    if (d == 3) {
        dirs = std::move(s2);
        weights = std::move(w2);
        return;
    }
    for (size_t i = 0; i < pol.x.size(); ++i) {
        const double psi = 0.5 * std::numbers::pi * (pol.x[i] + 1.0);
        const double sp = std::sin(psi);
        const double wpsi = 0.5 * std::numbers::pi * pol.w[i] * sp * sp;
        for (size_t j = 0; j < s2.size(); ++j) {
            Vec w(4);
            w[0] = std::cos(psi);
            w.tail(3) = sp * s2[j];
            dirs.push_back(w);
            weights.push_back(wpsi * w2[j]);
        }
    }
}

V2 to2(const Vec& v) { return V2(v[0], v[1]); }

struct HalfPlane {
    V2 n;
    double h;  // n . y <= h
};

DiscSectorMoments disc_polygon_moments(const V2& c, double rho, double k, double A, double B,
                                       const std::vector<HalfPlane>& planes, const GaussRule& rule,
                                       bool want_first_moment) {
    // Divergence theorem: prof = div(x f(|x|^2)) and x_k prof = div(H e_k), with
    // polynomial f and H, so the straight sides integrate exactly and the arcs in
    // closed form.
    DiscSectorMoments out;
    if (!(rho > 0.0) || !(B > 0.0)) return out;
    std::vector<HalfPlane> hp;
    for (const HalfPlane& p : planes) {
        const double nn = p.n.norm();
        if (nn == 0.0) {
            if (p.h < 0.0) return out;
            continue;
        }
        hp.push_back({p.n / nn, p.h / nn});
    }
    std::vector<double> angles;
    for (size_t j = 0; j < hp.size(); ++j) {
        const V2& n = hp[j].n;
        const V2 tau(-n.y(), n.x());
        const V2 y0 = hp[j].h * n;
        const double beta = tau.dot(y0 - c);
        const double disc = beta * beta - ((y0 - c).squaredNorm() - rho * rho);
        if (disc <= 0.0) continue;
        const double sq = std::sqrt(disc);
        double t0 = -beta - sq, t1 = -beta + sq;
        for (double t : {t0, t1}) {
            const V2 y = y0 + t * tau - c;
            angles.push_back(std::atan2(y.y(), y.x()));
        }
        for (size_t l = 0; l < hp.size() && t1 > t0; ++l) {
            if (l == j) continue;
            const double nt = hp[l].n.dot(tau);
            const double rhs = hp[l].h - hp[l].n.dot(y0);
            if (nt > 0.0) t1 = std::min(t1, rhs / nt);
            else if (nt < 0.0) t0 = std::max(t0, rhs / nt);
            else if (rhs < 0.0) t1 = t0;
        }
        if (t1 <= t0) continue;
        const double xn = hp[j].h - n.dot(c);
        const double half = 0.5 * (t1 - t0), mid = 0.5 * (t1 + t0);
        for (size_t i = 0; i < rule.x.size(); ++i) {
            const double t = mid + half * rule.x[i];
            const double v = B * (y0 + t * tau - c).squaredNorm();
            const double f = k / 8.0 * (4.0 * A * A * A - 6.0 * A * A * v + 4.0 * A * v * v - v * v * v);
            out.m0 += rule.w[i] * half * f * xn;
            if (want_first_moment) {
                const double s = std::max(0.0, A - v);
                out.m1 -= rule.w[i] * half * k * s * s * s * s / (8.0 * B) * n;
            }
        }
    }
    auto on_arc = [&](double t) {
        const V2 y = c + rho * V2(std::cos(t), std::sin(t));
        return std::all_of(hp.begin(), hp.end(), [&](const HalfPlane& p) { return p.n.dot(y) <= p.h; });
    };
    double arc = 0.0;
    if (angles.empty()) {
        arc = on_arc(0.0) ? 2.0 * std::numbers::pi : 0.0;
    } else {
        std::sort(angles.begin(), angles.end());
        angles.push_back(angles.front() + 2.0 * std::numbers::pi);
        for (size_t p = 0; p + 1 < angles.size(); ++p)
            if (angles[p + 1] > angles[p] && on_arc(0.5 * (angles[p] + angles[p + 1])))
                arc += angles[p + 1] - angles[p];
    }
    const double s = std::max(0.0, A - B * rho * rho);
    out.m0 += arc * k / (8.0 * B) * (A * A * A * A - s * s * s * s);
    return out;
}

std::vector<HalfPlane> cone_half_planes(const V2& a_in, const V2& b_in) {
    V2 a = a_in, b = b_in;
    if (cross(a, b) < 0.0) std::swap(a, b);
    return {{V2(a.y(), -a.x()), 0.0}, {V2(-b.y(), b.x()), 0.0}};
}

struct RegionMoments {
    std::vector<double> m0;
    std::vector<Vec> m1;  // about q
};

// d = 3: slices z = const, each a disc-polygon integral, Gauss panels in z split
// where the slice geometry changes.
RegionMoments slice_moments(const MollifiedGauge& g, const Vec& q, bool want_first_moment) {
    const double eps = g.eps;
    const RegionDecomposition& rd = *g.regions;
    const double k = bump_constant(3) / (eps * eps * eps);
    const double B = 1.0 / (eps * eps);
    const double zlo = q[2] - eps, zhi = q[2] + eps;
    std::vector<double> cuts{zlo, zhi, 0.0};
    for (const Vec& v : g.base.primal_vertices()) {
        const double vv = v.squaredNorm(), vq = v.dot(q);
        const double disc = vq * vq - vv * (q.squaredNorm() - eps * eps);
        if (disc < 0.0) continue;
        for (double t : {(vq - std::sqrt(disc)) / vv, (vq + std::sqrt(disc)) / vv})
            if (t > 0.0) cuts.push_back(t * v[2]);
    }
    for (const Interface& f : rd.interfaces) {
        const Vec& n = f.normal;
        const double xi = n.dot(q);
        if (std::abs(xi) >= eps) continue;
        const double rc = std::sqrt(eps * eps - xi * xi);
        const double zc = q[2] - xi * n[2];
        const double span = rc * std::sqrt(std::max(0.0, 1.0 - n[2] * n[2]));
        cuts.push_back(zc - span);
        cuts.push_back(zc + span);
    }
    std::vector<double> z;
    for (double t : cuts)
        if (t >= zlo && t <= zhi) z.push_back(t);
    std::sort(z.begin(), z.end());
    z.erase(std::unique(z.begin(), z.end()), z.end());

    const size_t m = rd.regions.size();
    std::vector<std::vector<Vec>> outward(m);
    for (const Interface& f : rd.interfaces) {
        outward[static_cast<size_t>(f.i)].push_back(-f.normal);
        outward[static_cast<size_t>(f.j)].push_back(f.normal);
    }
    RegionMoments out;
    out.m0.assign(m, 0.0);
    out.m1.assign(m, Vec::Zero(3));
    const GaussRule& zr = gauss_rule(g.quad.slice_nodes);
    const GaussRule& sr = gauss_rule(g.quad.radial_nodes);
    const V2 c(q[0], q[1]);
    std::vector<HalfPlane> hp;
    for (size_t p = 0; p + 1 < z.size(); ++p) {
        const double half = 0.5 * (z[p + 1] - z[p]), mid = 0.5 * (z[p + 1] + z[p]);
        if (half <= 0.0) continue;
        for (size_t iz = 0; iz < zr.x.size(); ++iz) {
            const double zz = mid + half * zr.x[iz];
            const double dz = zz - q[2];
            const double A = 1.0 - dz * dz * B;
            if (A <= 0.0) continue;
            const double rho = eps * std::sqrt(A);
            const double w = zr.w[iz] * half;
            for (size_t i = 0; i < m; ++i) {
                hp.clear();
                for (const Vec& n : outward[i]) hp.push_back({V2(n[0], n[1]), -n[2] * zz});
                const DiscSectorMoments mo = disc_polygon_moments(c, rho, k, A, B, hp, sr, want_first_moment);
                out.m0[i] += w * mo.m0;
                if (want_first_moment) {
                    out.m1[i][0] += w * mo.m1.x();
                    out.m1[i][1] += w * mo.m1.y();
                    out.m1[i][2] += w * dz * mo.m0;
                }
            }
        }
    }
    return out;
}

}  // namespace

RegionDecomposition region_decomposition(const PolyhedralNorm& phi) {
    const int d = phi.dim();
    require(d >= 2 && d <= 3, "region_decomposition: requires 2 <= d <= 3");
    const auto& gens = phi.generators();
    const auto& verts = phi.primal_vertices();
    RegionDecomposition out;
    out.dim = d;
    std::vector<std::vector<int>> active(gens.size());
    for (size_t i = 0; i < gens.size(); ++i) {
        Region r;
        r.generator = static_cast<int>(i);
        for (size_t v = 0; v < verts.size(); ++v)
            if (gens[i].dot(verts[v]) >= 1.0 - 1e-9) {
                r.rays.push_back(verts[v]);
                active[i].push_back(static_cast<int>(v));
            }
        if (static_cast<int>(r.rays.size()) < d || affine_rank(r.rays) != d - 1)
            throw DegenerateError("region_decomposition: degenerate cone for generator " + std::to_string(i));
        if (d == 2 && cross(to2(r.rays[0]), to2(r.rays[1])) < 0) std::swap(r.rays[0], r.rays[1]);
        out.regions.push_back(std::move(r));
    }
    for (size_t i = 0; i < gens.size(); ++i)
        for (size_t j = i + 1; j < gens.size(); ++j) {
            std::vector<int> common;
            std::set_intersection(active[i].begin(), active[i].end(), active[j].begin(), active[j].end(),
                                  std::back_inserter(common));
            if (static_cast<int>(common.size()) != d - 1) continue;
            Interface f;
            f.i = static_cast<int>(i);
            f.j = static_cast<int>(j);
            for (int v : common) f.rays.push_back(verts[static_cast<size_t>(v)]);
            f.normal = (gens[i] - gens[j]).normalized();
            out.interfaces.push_back(std::move(f));
        }
    return out;
}

double bump_constant(int d) {
    require(d >= 1, "bump_constant: d must be >= 1");
    return std::tgamma(0.5 * d + 4.0) / (6.0 * std::pow(std::numbers::pi, 0.5 * d));
}

MollifiedGauge make_mollified_gauge(const PolyhedralNorm& phi, double eps, QuadSpec quad) {
    require(eps > 0.0 && std::isfinite(eps), "mollified gauge: eps must be positive");
    require(quad.radial_nodes >= 6 && quad.slice_nodes >= 2 && quad.sphere_polar >= 4 &&
                quad.sphere_azimuth >= 4,
            "mollified gauge: quadrature orders too small");
    MollifiedGauge g{phi, eps, quad, std::nullopt, {}, {}};
    const int d = check_mollifier_dim(g, "mollified gauge");
    if (d <= 3) g.regions = region_decomposition(phi);
    if (d == 4) sphere_rule(d, quad, g.sphere_dirs, g.sphere_weights);
    return g;
}

DiscSectorMoments disc_sector_moments(const V2& c, double rho, double k, double A, double B, const V2& a,
                                      const V2& b, const QuadSpec& quad, bool want_first_moment) {
    return disc_polygon_moments(c, rho, k, A, B, cone_half_planes(a, b), gauss_rule(quad.radial_nodes),
                                want_first_moment);
}

double mollifier_mass(const MollifiedGauge& g) {
    const std::vector<double> w = region_weights(g, Vec::Zero(g.base.dim()));
    double total = 0.0;
    for (double x : w) total += x;
    return total;
}

std::vector<double> region_weights(const MollifiedGauge& g, const Vec& q) {
    const int d = check_mollifier_dim(g, "region_weights");
    require_dim(q, d, "region_weights");
    if (d == 4) return sphere_integrals(g, q, false).mass;
    if (d == 3) return slice_moments(g, q, false).m0;
    const double k = bump_constant(2) / (g.eps * g.eps);
    std::vector<double> out;
    for (const Region& r : g.regions->regions)
        out.push_back(disc_sector_moments(to2(q), g.eps, k, 1.0, 1.0 / (g.eps * g.eps), to2(r.rays[0]),
                                          to2(r.rays[1]), g.quad, false)
                          .m0);
    return out;
}

double mollified_value(const MollifiedGauge& g, const Vec& q) {
    const int d = check_mollifier_dim(g, "mollified_value");
    require_dim(q, d, "mollified_value");
    if (d == 4) return sphere_integrals(g, q, true).value;
    if (d == 3) {
        const RegionMoments mo = slice_moments(g, q, true);
        double v = 0.0;
        for (size_t i = 0; i < mo.m0.size(); ++i) v += g.base.generators()[i].dot(mo.m0[i] * q + mo.m1[i]);
        return v;
    }
    const double k = bump_constant(2) / (g.eps * g.eps);
    const auto& gens = g.base.generators();
    double v = 0.0;
    for (const Region& r : g.regions->regions) {
        const DiscSectorMoments mo = disc_sector_moments(to2(q), g.eps, k, 1.0, 1.0 / (g.eps * g.eps),
                                                         to2(r.rays[0]), to2(r.rays[1]), g.quad, true);
        const V2 p = to2(gens[static_cast<size_t>(r.generator)]);
        v += p.dot(mo.m0 * to2(q) + mo.m1);
    }
    return v;
}

Vec mollified_gradient(const MollifiedGauge& g, const Vec& q) {
    const std::vector<double> w = region_weights(g, q);
    Vec out = Vec::Zero(g.base.dim());
    for (size_t i = 0; i < w.size(); ++i) out += w[i] * g.base.generators()[i];
    return out;
}

SymMatrix mollified_hessian(const MollifiedGauge& g, const Vec& q) {
    const int d = check_mollifier_dim(g, "mollified_hessian");
    require(d <= 3, "mollified_hessian: requires d <= 3");
    require_dim(q, d, "mollified_hessian");
    const double eps = g.eps;
    const auto& gens = g.base.generators();
    Mat H = Mat::Zero(d, d);
    for (const Interface& f : g.regions->interfaces) {
        double mass = 0.0;
        if (d == 2) {
            const Vec u = f.rays[0].normalized();
            const double a = q.dot(u);
            const double b2 = std::max(0.0, q.squaredNorm() - a * a);
            const double rho2 = eps * eps - b2;
            if (rho2 <= 0.0) continue;
            const double rho = std::sqrt(rho2);
            const double lo = std::max(0.0, a - rho), hi = a + rho;
            if (hi <= lo) continue;
            const double k = bump_constant(2) / (eps * eps);
            const GaussRule& rule = gauss_rule(g.quad.radial_nodes);
            const double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo);
            for (size_t r = 0; r < rule.x.size(); ++r) {
                const double s = m + h * rule.x[r];
                mass += rule.w[r] * h * profile(k, 1.0, 1.0 / (eps * eps), (s - a) * (s - a) + b2);
            }
        } else {
            const Vec e1 = f.rays[0].normalized();
            Vec e2 = f.rays[1] - f.rays[1].dot(e1) * e1;
            e2.normalize();
            const Eigen::Vector3d n = Eigen::Vector3d(e1[0], e1[1], e1[2]).cross(Eigen::Vector3d(e2[0], e2[1], e2[2]));
            const double h = q[0] * n[0] + q[1] * n[1] + q[2] * n[2];
            const double A = 1.0 - h * h / (eps * eps);
            if (A <= 0.0) continue;
            const double k = bump_constant(3) / (eps * eps * eps);
            const V2 c(q.dot(e1), q.dot(e2));
            const V2 ra(f.rays[0].norm(), 0.0);
            const V2 rb(f.rays[1].dot(e1), f.rays[1].dot(e2));
            mass = disc_sector_moments(c, eps * std::sqrt(A), k, A, 1.0 / (eps * eps), ra, rb, g.quad, false).m0;
        }
        const Vec diff = gens[static_cast<size_t>(f.i)] - gens[static_cast<size_t>(f.j)];
        H += (mass / diff.norm()) * diff * diff.transpose();
    }
    return SymMatrix(H);
}

ShieldingReport shielding_verify(const MollifiedGauge& g, const Vec& q, double tol) {
    require(tol > 0.0, "shielding_verify: tol must be positive");
    ShieldingReport rep;
    rep.q = q;
    rep.grad = mollified_gradient(g, q);
    rep.hess = mollified_hessian(g, q);
    const double scale = 1.0 + rep.hess.norm();
    rep.dual_residual = std::abs(dual_norm_eval(g.base, rep.grad) - 1.0);
    // The face is located from the barycenter of the generators whose regions
    // meet the support ball; the gradient itself can sit within rounding of a
    // lower-dimensional face while the Hessian is still nonzero.
    const std::vector<double> w = region_weights(g, q);
    Vec bary = Vec::Zero(q.size());
    int active = 0;
    for (size_t i = 0; i < w.size(); ++i)
        if (w[i] > 0.0) {
            bary += g.base.generators()[i];
            ++active;
        }
    bary /= std::max(active, 1);
    rep.face_point = bary;
    const Subspace T = tangent_space(g.base, bary);
    const Mat P = T.projector();
    rep.membership_residual = (P * rep.hess.mat() * P - rep.hess.mat()).norm() / scale;
    for (const Vec& v : dual_subdifferential(g.base, bary).vertices)
        rep.kernel_residual = std::max(rep.kernel_residual, (rep.hess.mat() * v).norm() / scale);
    rep.pass = rep.dual_residual <= tol && rep.membership_residual <= tol && rep.kernel_residual <= tol;
    return rep;
}

double eps_c_estimate(const PolyhedralNorm& phi, double c, int samples, std::uint64_t seed) {
    require(c > 0.0 && std::isfinite(c), "eps_c_estimate: c must be positive");
    require(samples >= 1, "eps_c_estimate: samples must be >= 1");
    const RegionDecomposition rd = region_decomposition(phi);
    const int d = phi.dim();
    const auto& gens = phi.generators();
    const auto& verts = phi.primal_vertices();
    std::vector<Mat> cones;
    for (const Region& r : rd.regions) {
        Mat A(d, static_cast<Eigen::Index>(r.rays.size()));
        for (size_t k = 0; k < r.rays.size(); ++k) A.col(static_cast<Eigen::Index>(k)) = r.rays[k];
        cones.push_back(A);
    }
    Rng rng(seed);
    std::vector<std::vector<double>> dist;
    for (int s = 0; s < samples; ++s) {
        const Vec w = rng.unit_vec(d);
        const Vec q = c * w / norm_eval(phi, w);
        std::vector<double> row;
        for (const Mat& A : cones) row.push_back((A * nnls(A, q) - q).norm());
        dist.push_back(std::move(row));
    }
    for (int k = 1; k <= 60; ++k) {
        const double eps = c * std::ldexp(1.0, -k);
        bool ok = true;
        for (const auto& row : dist) {
            std::vector<size_t> act;
            for (size_t i = 0; i < row.size(); ++i)
                if (row[i] < eps) act.push_back(i);
            const bool common = std::any_of(verts.begin(), verts.end(), [&](const Vec& v) {
                return std::all_of(act.begin(), act.end(),
                                   [&](size_t i) { return gens[i].dot(v) >= 1.0 - 1e-9; });
            });
            if (!common) {
                ok = false;
                break;
            }
        }
        if (ok) return eps;
    }
    return 0.0;
}

ApproxNorm approx_norm(const MollifiedGauge& g, double level, double c) {
    require(c > 0.0, "approx_norm: c must be positive");
    const double floor = c + g.eps * g.base.lipschitz();
    if (!(level >= floor))
        throw InputError("approx_norm: level must be >= c + eps * Lip = " + std::to_string(floor));
    return ApproxNorm{g, level, c, (level - g.eps * g.base.lipschitz()) / c};
}

double approx_norm_eval(const ApproxNorm& psi, const Vec& q) {
    const MollifiedGauge& g = psi.source;
    require_dim(q, g.base.dim(), "approx_norm_eval");
    const double phq = norm_eval(g.base, q);
    if (phq == 0.0) return 0.0;
    const double delta = g.eps * g.base.lipschitz();
    // f(tq) = level has its root in [lo, hi] because phi <= f <= phi + delta.
    double lo = (psi.level - delta) / phq, hi = psi.level / phq;
    double t = hi;
    for (int it = 0; it < 200; ++it) {
        const Vec x = t * q;
        const double r = mollified_value(g, x) - psi.level;
        if (r > 0.0) hi = t;
        else lo = t;
        if (r == 0.0 || hi - lo <= 1e-15 * hi) break;
        const double slope = mollified_gradient(g, x).dot(q);
        double tn = slope > 0.0 ? t - r / slope : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) <= 1e-15 * t) {
            t = tn;
            break;
        }
        t = tn;
    }
    if (!std::isfinite(t) || t <= 0.0) throw NumericError("approx_norm_eval: root search failed");
    return 1.0 / t;
}

Vec approx_norm_gradient(const ApproxNorm& psi, const Vec& q) {
    const double v = approx_norm_eval(psi, q);
    require(v > 0.0, "approx_norm_gradient: q must be nonzero");
    const Vec x = q / v;
    const Vec df = mollified_gradient(psi.source, x);
    return df / df.dot(x);
}

SymMatrix approx_norm_hessian(const ApproxNorm& psi, const Vec& q, double rel_step) {
    require(rel_step > 0.0, "approx_norm_hessian: step must be positive");
    const int d = psi.source.base.dim();
    const double h = rel_step * q.norm();
    require(h > 0.0, "approx_norm_hessian: q must be nonzero");
    Mat H(d, d);
    for (int j = 0; j < d; ++j) {
        const Vec e = h * Vec::Unit(d, j);
        H.col(j) = (approx_norm_gradient(psi, q + e) - approx_norm_gradient(psi, q - e)) / (2.0 * h);
    }
    return SymMatrix(Mat(0.5 * (H + H.transpose())));
}

double approx_norm_error(const ApproxNorm& psi, const PolyhedralNorm& phi, int samples, Rng& rng) {
    require(samples >= 1, "approx_norm_error: samples must be >= 1");
    double err = 0.0;
    for (int s = 0; s < samples; ++s) {
        const Vec e = rng.unit_vec(phi.dim());
        err = std::max(err, std::abs(psi.level * approx_norm_eval(psi, e) / norm_eval(phi, e) - 1.0));
    }
    return err;
}

SmoothNorm smooth_norm(const std::string& name, int dim) {
    require(dim >= 1, "smooth_norm: dim must be >= 1");
    SmoothNorm n;
    n.name = name;
    n.dim = dim;
    if (name == "euclidean") {
        n.value = [](const Vec& q) { return q.norm(); };
        n.gradient = [](const Vec& q) { return Vec(q / q.norm()); };
        n.hessian = [](const Vec& q) {
            const double r = q.norm();
            const Vec u = q / r;
            return SymMatrix(Mat((Mat::Identity(q.size(), q.size()) - u * u.transpose()) / r));
        };
        n.dual_gradient = [](const Vec& p) { return Vec(p / p.norm()); };
    } else if (name == "quartic") {
        require(dim == 2 || dim == 3, "smooth_norm: quartic requires d = 2 or 3");
        n.value = [](const Vec& q) { return std::pow(q.array().pow(4).sum(), 0.25); };
        n.gradient = [](const Vec& q) {
            const double f = std::pow(q.array().pow(4).sum(), 0.25);
            return Vec(q.array().cube() / (f * f * f));
        };
        n.hessian = [](const Vec& q) {
            const double f = std::pow(q.array().pow(4).sum(), 0.25);
            const Vec q3 = q.array().cube();
            const Vec q2 = q.array().square();
            Mat H = 3.0 * Mat(q2.asDiagonal()) / std::pow(f, 3) - 3.0 * q3 * q3.transpose() / std::pow(f, 7);
            return SymMatrix(H);
        };
        n.dual_gradient = [](const Vec& p) {
            const double fs = std::pow(p.array().abs().pow(4.0 / 3.0).sum(), 0.75);
            Vec g(p.size());
            for (Eigen::Index i = 0; i < p.size(); ++i)
                g[i] = std::copysign(std::cbrt(std::abs(p[i])), p[i]) / std::cbrt(fs);
            return g;
        };
    } else {
        throw InputError("unknown smooth norm '" + name + "'");
    }
    return n;
}

SelfShieldingReport c2_self_shielding_check(const SmoothNorm& n, const Vec& q, double tol) {
    require_dim(q, n.dim, "c2_self_shielding_check");
    require(q.norm() > 0.0, "c2_self_shielding_check: q must be nonzero");
    SelfShieldingReport rep;
    rep.residual = (n.hessian(q).mat() * n.dual_gradient(n.gradient(q))).norm();
    rep.pass = rep.residual <= tol;
    return rep;
}

}  // namespace finslab
