#include "finslab/core.hpp"
#include "finslab/linalg.hpp"
#include "finslab/operators.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace finslab;
using namespace finslab::testing;

TEST_CASE("l1 gauge and its dual") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    CHECK(norm_eval(l1, vec({3, -4})) == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(dual_norm_eval(l1, vec({3, -4})) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(norm_eval(l1, vec({0, 0})) == 0.0);
    CHECK(dual_norm_eval(l1, vec({0, 0})) == 0.0);
    CHECK(l1.symmetric());
    CHECK(l1.generators().size() == 4);
    CHECK(l1.primal_vertices().size() == 4);
}

TEST_CASE("closed forms of l1 and linf on random points") {
    Rng rng(11);
    for (int d = 1; d <= 4; ++d) {
        const PolyhedralNorm l1 = builtin_norm("l1", d);
        const PolyhedralNorm linf = builtin_norm("linf", d);
        for (int k = 0; k < 200; ++k) {
            const Vec q = rng.normal_vec(d);
            CHECK(std::abs(norm_eval(l1, q) - q.lpNorm<1>()) <= 1e-12 * q.lpNorm<1>());
            CHECK(std::abs(dual_norm_eval(l1, q) - q.lpNorm<Eigen::Infinity>()) <= 1e-12 * q.norm());
            CHECK(std::abs(norm_eval(linf, q) - q.lpNorm<Eigen::Infinity>()) <= 1e-12 * q.norm());
            CHECK(std::abs(dual_norm_eval(linf, q) - q.lpNorm<1>()) <= 1e-12 * q.lpNorm<1>());
        }
    }
}

TEST_CASE("rhombic dodecahedron dual gauge") {
    const PolyhedralNorm rd = builtin_norm("rhombic-dodecahedron", 3);
    // The dual gauge is the max of the generator rays' support; at (1,1,0)
    // enumerating every generator by hand gives 1.
    double oracle = 0.0;
    for (const Vec& v : rd.primal_vertices()) oracle = std::max(oracle, v.dot(vec({1, 1, 0})));
    CHECK(dual_norm_eval(rd, vec({1, 1, 0})) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(dual_norm_eval(rd, vec({1, 1, 0})) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rd.generators().size() == 14);
    CHECK(rd.primal_vertices().size() == 12);
}

TEST_CASE("canonical generators drop interior and duplicate points") {
    const std::vector<Vec> pts = {vec({1, 0}), vec({-1, 0}), vec({0, 1}), vec({0, -1}), vec({0.5, 0})};
    const auto out = canonical_generators(pts);
    REQUIRE(out.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK((out[static_cast<size_t>(i)] - pts[static_cast<size_t>(i)]).norm() == 0.0);

    const std::vector<Vec> square = {vec({1, 1}), vec({-1, 1}), vec({-1, -1}), vec({1, -1})};
    CHECK(same_point_set(canonical_generators(square), square));
    std::vector<Vec> dup = square;
    dup.push_back(vec({1, 1}));
    CHECK(canonical_generators(dup).size() == 4);
}

TEST_CASE("circle points plus chord midpoints reduce to the circle points") {
    Rng rng(5);
    std::vector<Vec> circle;
    for (int i = 0; i < 100; ++i) {
        const double t = 2.0 * std::numbers::pi * (i + 0.3 * rng.uniform()) / 100.0;
        circle.push_back(vec({std::cos(t), std::sin(t)}));
    }
    std::vector<Vec> all = circle;
    for (int i = 0; i < 100; ++i) all.push_back(0.5 * (circle[static_cast<size_t>(i)] + circle[static_cast<size_t>((i + 37) % 100)]));
    const auto out = canonical_generators(all);
    CHECK(same_point_set(out, circle));
    // Independent oracle: each kept point is outside the hull of the others.
    for (size_t i = 0; i < circle.size(); i += 9) {
        std::vector<Vec> others = circle;
        others.erase(others.begin() + static_cast<std::ptrdiff_t>(i));
        CHECK_FALSE(in_convex_hull(others, circle[i]));
    }
}

TEST_CASE("invalid generator sets") {
    CHECK_THROWS_AS(PolyhedralNorm({vec({1, 0}), vec({0, 1})}), DegenerateError);
    CHECK_THROWS_AS(PolyhedralNorm({vec({1, 0}), vec({0, 1, 0})}), InputError);
    CHECK_THROWS_AS(PolyhedralNorm(std::vector<Vec>{}), InputError);
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    CHECK_THROWS_AS(norm_eval(l1, vec({1, 2, 3})), InputError);
    CHECK_THROWS_AS(builtin_norm("no-such-norm", 2), InputError);
    CHECK_THROWS_AS(builtin_norm("rhombic-dodecahedron", 2), InputError);
}

TEST_CASE("asymmetric gauge") {
    const PolyhedralNorm tri({vec({1, 0}), vec({-1, 1}), vec({-1, -1})}, "triangle");
    CHECK_FALSE(tri.symmetric());
    const Vec q = vec({-2, 0});
    CHECK(norm_eval(tri, q) == doctest::Approx(2.0));
    CHECK(norm_eval(tri, -q) == doctest::Approx(2.0 * 1.0));
    CHECK(norm_eval(tri, vec({0, 1})) == doctest::Approx(1.0));
    // The dual of the dual returns the original values.
    const PolyhedralNorm back = tri.dual().dual();
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const Vec x = rng.normal_vec(2);
        CHECK(std::abs(norm_eval(back, x) - norm_eval(tri, x)) <= 1e-12 * norm_eval(tri, x));
    }
}

TEST_CASE("gauge axioms on random samples") {
    Rng rng(7);
    const std::vector<PolyhedralNorm> norms = {builtin_norm("l1", 2), builtin_norm("linf", 3),
                                               builtin_norm("euclidean-polytope-8", 2),
                                               builtin_norm("rhombic-dodecahedron", 3)};
    for (const PolyhedralNorm& phi : norms)
        for (int k = 0; k < 300; ++k) {
            const Vec a = rng.normal_vec(phi.dim());
            const Vec b = rng.normal_vec(phi.dim());
            const double lam = std::exp(rng.uniform(-3.0, 3.0));
            CHECK(std::abs(norm_eval(phi, lam * a) - lam * norm_eval(phi, a)) <= 4e-16 * lam * norm_eval(phi, a) * 4);
            CHECK(norm_eval(phi, a + b) <= norm_eval(phi, a) + norm_eval(phi, b) + 1e-12);
            CHECK(norm_eval(phi, a) > 0.0);
        }
}

TEST_CASE("duality involution for built-in norms") {
    Rng rng(1);
    const std::vector<PolyhedralNorm> norms = {builtin_norm("l1", 2), builtin_norm("l1", 3), builtin_norm("linf", 2),
                                               builtin_norm("linf", 3), builtin_norm("rhombic-dodecahedron", 3),
                                               builtin_norm("euclidean-polytope-8", 2)};
    for (const PolyhedralNorm& phi : norms) {
        const PolyhedralNorm back = phi.dual().dual();
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const Vec q = rng.unit_vec(phi.dim());
            worst = std::max(worst, std::abs(norm_eval(back, q) - norm_eval(phi, q)) / norm_eval(phi, q));
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("2k-gon approximation of the Euclidean norm") {
    const int k = 8;
    const PolyhedralNorm phi = builtin_norm("euclidean-polytope-8", 2);
    CHECK(phi.generators().size() == 2 * k);
    Rng rng(2);
    for (int s = 0; s < 200; ++s) {
        const Vec q = rng.normal_vec(2);
        const double v = norm_eval(phi, q);
        CHECK(v <= q.norm() * (1 + 1e-14));
        CHECK(v >= std::cos(std::numbers::pi / (2 * k)) * q.norm() * (1 - 1e-14));
    }
}

TEST_CASE("subdifferential faces") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const PolyhedralNorm linf = builtin_norm("linf", 2);
    // dphi*(p) for l1 is a face of the primal (linf-type) ball: conv J(p).
    SubdifferentialFace f = dual_subdifferential(l1, vec({2, 1}));
    CHECK(f.dim == 0);
    REQUIRE(f.vertices.size() == 1);
    CHECK((f.vertices[0] - vec({1, 0})).norm() == 0.0);
    f = dual_subdifferential(l1, vec({1, 1}));
    CHECK(f.dim == 1);
    CHECK(same_point_set(f.vertices, {vec({1, 0}), vec({0, 1})}));
    f = subdifferential(l1, vec({0, 0}));
    CHECK(f.vertices.size() == 4);
    CHECK(f.dim == 2);
    f = subdifferential(linf, vec({2, 1}));
    CHECK(same_point_set(f.vertices, {vec({1, 0})}));
    f = subdifferential(l1, vec({1, 0}));
    CHECK(f.dim == 1);
    CHECK(same_point_set(f.vertices, {vec({1, 1}), vec({1, -1})}));
}

TEST_CASE("subdifferential vertices attain the same inner product") {
    Rng rng(9);
    const PolyhedralNorm rd = builtin_norm("rhombic-dodecahedron", 3);
    for (int k = 0; k < 200; ++k) {
        const Vec q = int_vec(rng, 3);
        const SubdifferentialFace f = subdifferential(rd, q);
        const double v = norm_eval(rd, q);
        for (const Vec& p : f.vertices) CHECK(std::abs(p.dot(q) - v) <= 1e-9 * std::max(1.0, v));
        std::vector<Vec> pts = f.vertices;
        CHECK(f.dim == affine_rank(pts));
    }
}

TEST_CASE("subdifferential upper semicontinuity along perturbation ladders") {
    Rng rng(4);
    const PolyhedralNorm phi = builtin_norm("rhombic-dodecahedron", 3);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec q = int_vec(rng, 3, 2);
        const Vec w = rng.normal_vec(3);
        const SubdifferentialFace limit = subdifferential(phi, q);
        for (int k = 10; k <= 30; k += 5) {
            const SubdifferentialFace fk = subdifferential(phi, q + std::ldexp(1.0, -k) * w);
            for (const Vec& v : fk.vertices) {
                bool inside = false;
                for (const Vec& u : limit.vertices)
                    if ((u - v).norm() <= 1e-9) inside = true;
                CHECK(inside);
            }
        }
    }
}

TEST_CASE("l1 tangent space matches the closed form") {
    Rng rng(12);
    for (int d = 2; d <= 3; ++d) {
        const PolyhedralNorm l1 = builtin_norm("l1", d);
        for (int k = 0; k < 1000; ++k) {
            const Vec p = int_vec(rng, d);
            const double m = p.cwiseAbs().maxCoeff();
            std::vector<Vec> span;
            int J = 0;
            for (int i = 0; i < d; ++i) {
                if (std::abs(p[i]) < m)
                    span.push_back(Vec::Unit(d, i));
                else
                    ++J;
            }
            const Subspace T = tangent_space(l1, p);
            CHECK(T.dim() == static_cast<int>(span.size()));
            CHECK(subspace_gap(T.projector(), projector(span, d)) <= 1e-12);
            CHECK(matrix_space_support(l1, p).dim() == d - J + 1);
        }
    }
    CHECK(tangent_space(builtin_norm("l1", 2), vec({2, 1})).dim() == 1);
    CHECK(tangent_space(builtin_norm("l1", 2), vec({1, 1})).dim() == 0);
    CHECK(tangent_space(builtin_norm("l1", 2), vec({0, 0})).dim() == 0);
}

TEST_CASE("matrix space basis and membership examples") {
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    auto B = matrix_space_basis(l1, vec({1, 1}));
    REQUIRE(B.size() == 1);
    // One matrix proportional to p p^T.
    const Mat pp = vec({1, 1}) * vec({1, 1}).transpose();
    CHECK((B[0].mat() / B[0].norm() - pp / pp.norm()).norm() <= 1e-12);
    CHECK(matrix_space_basis(l1, vec({2, 1})).size() == 3);
    CHECK(matrix_space_basis(l1, vec({0, 0})).empty());

    CHECK(matrix_space_membership(l1, vec({0, 3}), SymMatrix(Mat::Random(2, 2)), 1e-12));
    CHECK_FALSE(matrix_space_membership(l1, vec({1, 1}), diag({1, 0}), 1e-6));
    Rng rng(2);
    for (int k = 0; k < 50; ++k)
        CHECK(matrix_space_membership(builtin_norm("l1", 3), int_vec(rng, 3), SymMatrix::zero(3), 1e-12));
}

TEST_CASE("matrix sandwich: supported matrices pass, leaking ones fail") {
    Rng rng(21);
    const PolyhedralNorm phi = builtin_norm("l1", 3);
    for (int k = 0; k < 300; ++k) {
        const Vec p = int_vec(rng, 3);
        const Subspace V = matrix_space_support(phi, p);
        const Mat P = V.projector();
        // A >= 0 supported on V and X sandwiched by -cA <= X <= cA.
        const Mat G = P * Mat::Random(3, 3);
        const Mat A = G * G.transpose() + P;
        const Mat Y = SymMatrix(Mat::Random(3, 3)).mat();
        const SymMatrix X(P * Y * P);
        // A >= P on V, so c = 2 ||X|| gives the sandwich.
        const double c = 2.0 * X.norm();
        Eigen::SelfAdjointEigenSolver<Mat> lo(c * A + X.mat()), hi(c * A - X.mat());
        CHECK(lo.eigenvalues().minCoeff() >= -1e-12);
        CHECK(hi.eigenvalues().minCoeff() >= -1e-12);
        CHECK(matrix_space_membership(phi, p, X, 1e-10));
        if (V.dim() < 3) {
            const std::vector<Vec> comp = orthogonal_complement(V.basis, 3);
            const SymMatrix leak(X.mat() + comp[0] * comp[0].transpose());
            CHECK_FALSE(matrix_space_membership(phi, p, leak, 1e-6));
        }
    }
}

TEST_CASE("derived dual norm agrees with the dual of the derived norm") {
    Rng rng(8);
    const EdgeSet E = builtin_edges("z2");
    const PolyhedralNorm under = derived_norm(E);
    for (int k = 0; k < 200; ++k) {
        const Vec p = rng.normal_vec(2);
        CHECK(std::abs(dual_norm_eval(under, p) - derived_dual_norm(E, p)) <= 1e-12 * (1 + p.norm()));
    }
}

TEST_CASE("rng is reproducible and in range") {
    Rng a(42), b(42);
    for (int k = 0; k < 100; ++k) CHECK(a.next() == b.next());
    Rng c(1);
    for (int k = 0; k < 1000; ++k) {
        const double u = c.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const long long i = c.integer(-2, 3);
        CHECK(i >= -2);
        CHECK(i <= 3);
    }
}

TEST_CASE("symmetric matrix storage is exactly symmetric") {
    Mat m(3, 3);
    m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const SymMatrix s(m);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(s(i, j) == s(j, i));
    CHECK(s(0, 1) == 4.0);
    CHECK_THROWS_AS(SymMatrix(Mat::Zero(2, 3)), InputError);
}
