#include "finslab/linalg.hpp"
#include "finslab/shielding.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace finslab;
using namespace finslab::testing;

namespace {

// Five-point central differences of the gradient, symmetrized.
Mat fd_hessian(const MollifiedGauge& g, const Vec& q, double h) {
    const int d = static_cast<int>(q.size());
    Mat F(d, d);
    for (int j = 0; j < d; ++j) {
        const Vec e = h * Vec::Unit(d, j);
        F.col(j) = (-mollified_gradient(g, q + 2 * e) + 8 * mollified_gradient(g, q + e) -
                    8 * mollified_gradient(g, q - e) + mollified_gradient(g, q - 2 * e)) /
                   (12 * h);
    }
    return 0.5 * (F + F.transpose());
}

Vec annulus_point(Rng& rng, const PolyhedralNorm& phi, double lo, double hi) {
    const Vec w = rng.unit_vec(phi.dim());
    return w * (rng.uniform(lo, hi) / norm_eval(phi, w));
}

}  // namespace

TEST_CASE("region decompositions") {
    RegionDecomposition r = region_decomposition(builtin_norm("l1", 2));
    CHECK(r.regions.size() == 4);
    CHECK(r.interfaces.size() == 4);
    for (const Interface& f : r.interfaces) {
        REQUIRE(f.rays.size() == 1);
        // Half-lines along the axes.
        CHECK(std::min(std::abs(f.rays[0][0]), std::abs(f.rays[0][1])) == 0.0);
    }
    r = region_decomposition(builtin_norm("l1", 3));
    CHECK(r.regions.size() == 8);
    CHECK(r.interfaces.size() == 12);
    const PolyhedralNorm rd = builtin_norm("rhombic-dodecahedron", 3);
    r = region_decomposition(rd);
    CHECK(r.regions.size() == 14);
    CHECK(r.interfaces.size() == 24);
    for (const Interface& f : r.interfaces) {
        const Vec diff = rd.generators()[static_cast<size_t>(f.i)] - rd.generators()[static_cast<size_t>(f.j)];
        CHECK(std::abs(std::abs(f.normal.dot(diff)) - diff.norm()) <= 1e-12);
        for (const Vec& ray : f.rays) CHECK(std::abs(diff.dot(ray)) <= 1e-12);
    }
    CHECK_THROWS_AS(region_decomposition(builtin_norm("l1", 4)), InputError);
    CHECK_THROWS_AS(PolyhedralNorm({vec({1, 0})}), DegenerateError);
}

TEST_CASE("regions cover space") {
    Rng rng(2);
    for (const PolyhedralNorm& phi : {builtin_norm("euclidean-polytope-5", 2), builtin_norm("rhombic-dodecahedron", 3)}) {
        const RegionDecomposition r = region_decomposition(phi);
        for (int k = 0; k < 200; ++k) {
            const Vec q = rng.normal_vec(phi.dim());
            int hits = 0;
            for (const Region& reg : r.regions) {
                Mat R(phi.dim(), static_cast<Eigen::Index>(reg.rays.size()));
                for (size_t j = 0; j < reg.rays.size(); ++j) R.col(static_cast<Eigen::Index>(j)) = reg.rays[j];
                const Vec x = nnls(R, q);
                if ((R * x - q).norm() <= 1e-9 * q.norm()) {
                    ++hits;
                    CHECK(std::abs(phi.generators()[static_cast<size_t>(reg.generator)].dot(q) - norm_eval(phi, q)) <=
                          1e-9 * norm_eval(phi, q));
                }
            }
            CHECK(hits == 1);
        }
    }
}

TEST_CASE("bump normalization against radial integration") {
    for (int d = 2; d <= 4; ++d) {
        const double sphere = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
        const int n = 20000;
        double radial = 0.0;  // Simpson on [0, 1]
        for (int i = 0; i <= n; ++i) {
            const double r = static_cast<double>(i) / n;
            const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            radial += w * std::pow(1 - r * r, 3) * std::pow(r, d - 1);
        }
        radial /= 3.0 * n;
        CHECK(bump_constant(d) * sphere * radial == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (const auto& [name, d] : std::vector<std::pair<std::string, int>>{{"l1", 2}, {"l1", 3}, {"l1", 4}}) {
        const MollifiedGauge g = make_mollified_gauge(builtin_norm(name, d), 0.05);
        CHECK(std::abs(mollifier_mass(g) - 1.0) <= 1e-10);
    }
}

TEST_CASE("disc sector moments against a dense grid") {
    Rng rng(8);
    for (int trial = 0; trial < 4; ++trial) {
        const Eigen::Vector2d c(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        const double rho = rng.uniform(0.3, 1.0);
        const double k = 1.7, A = 1.0, B = 1.0 / (rho * rho);
        const double ta = rng.uniform(0, 2 * std::numbers::pi), tb = ta + rng.uniform(0.3, 2.8);
        const Eigen::Vector2d a(std::cos(ta), std::sin(ta)), b(std::cos(tb), std::sin(tb));
        const DiscSectorMoments m = disc_sector_moments(c, rho, k, A, B, a, b, QuadSpec{}, true);
        const int n = 1500;
        const double h = 2 * rho / n;
        double m0 = 0.0;
        Eigen::Vector2d m1 = Eigen::Vector2d::Zero();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Eigen::Vector2d y = c + Eigen::Vector2d(-rho + (i + 0.5) * h, -rho + (j + 0.5) * h);
                const double r2 = (y - c).squaredNorm();
                if (r2 >= rho * rho) continue;
                const bool in_cone = (a.x() * y.y() - a.y() * y.x()) >= 0 && (y.x() * b.y() - y.y() * b.x()) >= 0;
                if (!in_cone) continue;
                const double f = k * std::pow(A - B * r2, 3) * h * h;
                m0 += f;
                m1 += f * (y - c);
            }
        CHECK(std::abs(m.m0 - m0) <= 2e-3 * std::max(1e-3, std::abs(m0)) + 1e-5);
        CHECK((m.m1 - m1).norm() <= 2e-3 * std::max(1e-3, m1.norm()) + 1e-5);
    }
}

TEST_CASE("gradient examples and invariants") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const MollifiedGauge g = make_mollified_gauge(l1, 0.05);
    CHECK((mollified_gradient(g, vec({0.7, 0.3})) - vec({1, 1})).norm() <= 1e-12);
    CHECK(mollified_hessian(g, vec({0.7, 0.3})).norm() == 0.0);
    CHECK((mollified_gradient(g, vec({0.7, 0.0})) - vec({1, 0})).norm() <= 1e-12);

    Rng rng(5);
    for (const PolyhedralNorm& phi : {l1, builtin_norm("euclidean-polytope-5", 2), builtin_norm("l1", 3),
                                      builtin_norm("rhombic-dodecahedron", 3)}) {
        const MollifiedGauge gp = make_mollified_gauge(phi, 0.05);
        for (int k = 0; k < 30; ++k) {
            const Vec q = annulus_point(rng, phi, 0.2, 1.0);
            const std::vector<double> w = region_weights(gp, q);
            double sum = 0.0;
            for (double x : w) {
                CHECK(x >= -1e-12);
                sum += x;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
            Vec combo = Vec::Zero(phi.dim());
            for (size_t i = 0; i < w.size(); ++i) combo += w[i] * phi.generators()[i];
            const Vec grad = mollified_gradient(gp, q);
            CHECK((combo - grad).norm() <= 1e-9);
            CHECK(in_convex_hull(phi.generators(), grad, 1e-9));
            CHECK(mollified_value(gp, q) >= norm_eval(phi, q) - 1e-12);
        }
    }
}

TEST_CASE("hessian on an axis is rank one along the interface normal") {
    const MollifiedGauge g = make_mollified_gauge(builtin_norm("l1", 2), 0.05);
    const SymMatrix H = mollified_hessian(g, vec({0.4, 0.01}));
    CHECK(H(1, 1) > 0.0);
    CHECK(std::abs(H(0, 0)) <= 1e-14);
    CHECK(std::abs(H(0, 1)) <= 1e-14);
    CHECK((H.mat() - fd_hessian(g, vec({0.4, 0.01}), 1e-4)).norm() <= 1e-4 * std::max(1.0, H.norm()));
}

TEST_CASE("hessian against finite differences of the gradient") {
    Rng rng(14);
    for (const auto& [name, d, count] : std::vector<std::tuple<std::string, int, int>>{
             {"l1", 2, 50}, {"euclidean-polytope-5", 2, 50}, {"l1", 3, 20}, {"rhombic-dodecahedron", 3, 20}}) {
        const PolyhedralNorm phi = builtin_norm(name, d);
        const MollifiedGauge g = make_mollified_gauge(phi, 0.05);
        double worst = 0.0;
        for (int k = 0; k < count; ++k) {
            const Vec q = annulus_point(rng, phi, 0.2, 1.0);
            const SymMatrix H = mollified_hessian(g, q);
            worst = std::max(worst, (H.mat() - fd_hessian(g, q, 1e-4)).norm() / std::max(1.0, H.norm()));
            Eigen::SelfAdjointEigenSolver<Mat> es(H.mat());
            CHECK(es.eigenvalues().minCoeff() >= -1e-8 * std::max(1.0, H.norm()));
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("midpoint convexity of the mollified gauge") {
    Rng rng(15);
    const MollifiedGauge g = make_mollified_gauge(builtin_norm("euclidean-polytope-5", 2), 0.1);
    for (int k = 0; k < 1000; ++k) {
        const Vec a = rng.normal_vec(2), b = rng.normal_vec(2);
        CHECK(mollified_value(g, 0.5 * (a + b)) <= 0.5 * (mollified_value(g, a) + mollified_value(g, b)) + 1e-10);
    }
}

TEST_CASE("shielding on the annulus and the chain into the matrix space") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const MollifiedGauge g = make_mollified_gauge(l1, 0.05);
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const Vec q = annulus_point(rng, l1, 0.5, 1.0);
        const ShieldingReport r = shielding_verify(g, q, 1e-6);
        CHECK(r.pass);
        CHECK(matrix_space_membership(l1, r.face_point, r.hess, 1e-6));
    }
    // A point in a single region passes trivially.
    const ShieldingReport inside = shielding_verify(g, vec({0.6, 0.3}), 1e-12);
    CHECK(inside.pass);
    CHECK(inside.hess.norm() == 0.0);

    const MollifiedGauge g3 = make_mollified_gauge(builtin_norm("rhombic-dodecahedron", 3), 0.05);
    for (int k = 0; k < 20; ++k) CHECK(shielding_verify(g3, annulus_point(rng, g3.base, 0.5, 1.0), 1e-6).pass);
}

TEST_CASE("eps beyond the discrete-geometry bound fails") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const MollifiedGauge g = make_mollified_gauge(l1, 0.4);
    const ShieldingReport r = shielding_verify(g, vec({0.25, 0.25}), 1e-6);
    CHECK_FALSE(r.pass);
    CHECK(r.dual_residual > 1e-3);
}

TEST_CASE("eps_c estimates") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const double e1 = eps_c_estimate(l1, 1.0);
    CHECK(e1 > 0.0);
    CHECK(eps_c_estimate(l1, 2.0) == doctest::Approx(2.0 * e1).epsilon(1e-12));
    CHECK(eps_c_estimate(l1, 1e-3) <= 1e-3);
    CHECK(eps_c_estimate(builtin_norm("rhombic-dodecahedron", 3), 1.0, 200) > 0.0);
}

TEST_CASE("approximating norm") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    std::vector<double> errs;
    for (double eps : {0.1, 0.05, 0.025}) {
        Rng rng(9);
        errs.push_back(approx_norm_error(approx_norm(make_mollified_gauge(l1, eps), 1.5, 0.5), l1, 400, rng));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);

    const ApproxNorm psi = approx_norm(make_mollified_gauge(l1, 0.05), 1.5, 0.5);
    CHECK(psi.margin > 1.0);
    Rng rng(10);
    for (int k = 0; k < 50; ++k) {
        const Vec q = rng.normal_vec(2);
        const double lam = std::exp(rng.uniform(-2, 2));
        CHECK(approx_norm_eval(psi, lam * q) == doctest::Approx(lam * approx_norm_eval(psi, q)).epsilon(1e-12));
    }
    for (int k = 0; k < 100; ++k) {
        const Vec e = rng.unit_vec(2);
        const Vec p = approx_norm_gradient(psi, e);
        const SymMatrix H = approx_norm_hessian(psi, e);
        CHECK(subspace_residual(matrix_space_support(l1, p), H) <= 1e-5);
    }
    CHECK_THROWS_AS(approx_norm(make_mollified_gauge(l1, 0.05), 0.5, 0.5), InputError);
}

TEST_CASE("smooth norms shield themselves") {
    const SmoothNorm eu = smooth_norm("euclidean", 3);
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        const Vec q = rng.normal_vec(3);
        CHECK((eu.hessian(q).mat() * q).norm() <= 1e-14 * q.norm());
    }
    const SmoothNorm quartic = smooth_norm("quartic", 2);
    CHECK(c2_self_shielding_check(quartic, vec({1, 1})).residual <= 1e-10);
    for (int d = 2; d <= 3; ++d) {
        const SmoothNorm n = smooth_norm("quartic", d);
        for (int k = 0; k < 100; ++k) CHECK(c2_self_shielding_check(n, rng.normal_vec(d)).pass);
    }
    CHECK_THROWS_AS(smooth_norm("quartic", 5), InputError);
}
