// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "finslab/bench.hpp"
#include "finslab/io.hpp"
#include "finslab/linalg.hpp"
#include "finslab/operators.hpp"
#include "finslab/shielding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace finslab;

namespace {

constexpr double kInvolutionTol = 1e-9;
constexpr double kTime1 = 5.0;
constexpr double kProjectorTol = 1e-12;
constexpr double kCompatTol = 1e-8;
constexpr double kNegativeControl = 0.1;
constexpr double kShieldTol = 1e-6;
constexpr double kHessFdTol = 1e-4;
constexpr double kTime5 = 60.0;
constexpr double kApproxTol = 0.05;
constexpr double kApproxEps = 0.05;
constexpr double kApproxLevel = 1.5;
constexpr double kApproxCore = 0.5;
constexpr double kMembershipTol = 1e-5;
constexpr double kTime7 = 120.0;
constexpr double kRatioTol = 0.8;
constexpr double kTime8 = 300.0;
constexpr double kSpreadTol = 0.05;
constexpr double kDriftTol = 0.02;
constexpr double kGridH = 0.01;
constexpr double kEikonalConstant = 5.0;
constexpr double kPerimeterTol = 1e-9;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string num(double x) { return format_double(x); }

Vec random_mixed(Rng& rng, int d) {
    Vec v(d);
    if (rng.uniform() < 0.5) {
        do {
            for (int i = 0; i < d; ++i) v[i] = static_cast<double>(rng.integer(-3, 3));
        } while (v.cwiseAbs().maxCoeff() == 0.0);
        return v;
    }
    return rng.normal_vec(d);
}

Vec random_rational(Rng& rng, int d) {
    Vec v(d);
    do {
        for (int i = 0; i < d; ++i) v[i] = static_cast<double>(rng.integer(-6, 6)) / rng.integer(1, 3);
    } while (v.cwiseAbs().maxCoeff() == 0.0);
    return v;
}

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

void append_checks(Outcome& o, const BenchReport& r) {
    for (const Check& c : r.checks) o.require(c.pass, r.name + " " + c.name + " " + num(c.value) + " <= " + num(c.tolerance));
}

Outcome involution() {
    Outcome o;
    Rng rng(1);
    for (const auto& [name, d] : std::vector<std::pair<std::string, int>>{
             {"l1", 2}, {"l1", 3}, {"linf", 2}, {"linf", 3}, {"rhombic-dodecahedron", 3}, {"euclidean-polytope-8", 2}}) {
        const PolyhedralNorm phi = builtin_norm(name, d);
        const PolyhedralNorm back = phi.dual().dual();
        double worst = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const Vec q = rng.unit_vec(d);
            worst = std::max(worst, std::abs(norm_eval(back, q) - norm_eval(phi, q)) / norm_eval(phi, q));
        }
        o.require(worst <= kInvolutionTol, name + "/d" + std::to_string(d) + " " + num(worst));
    }
    return o;
}

Outcome l1_closed_form() {
    Outcome o;
    Rng rng(2);
    for (int d = 2; d <= 3; ++d) {
        const PolyhedralNorm l1 = builtin_norm("l1", d);
        int dim_mismatch = 0, support_mismatch = 0;
        double gap = 0.0;
        for (int k = 0; k < 1000; ++k) {
            const Vec p = random_rational(rng, d);
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
            dim_mismatch += T.dim() != static_cast<int>(span.size());
            gap = std::max(gap, (T.projector() - projector(span, d)).norm());
            support_mismatch += matrix_space_support(l1, p).dim() != d - J + 1;
        }
        o.require(dim_mismatch == 0 && support_mismatch == 0 && gap <= kProjectorTol,
                  "d" + std::to_string(d) + " dims " + std::to_string(dim_mismatch) + "/" +
                      std::to_string(support_mismatch) + " projector gap " + num(gap));
    }
    return o;
}

Outcome inf_laplacian_compat() {
    Outcome o;
    Rng rng(3);
    for (const auto& [name, d] : std::vector<std::pair<std::string, int>>{{"l1", 2},
                                                                          {"l1", 3},
                                                                          {"linf", 2},
                                                                          {"linf", 3},
                                                                          {"rhombic-dodecahedron", 3},
                                                                          {"euclidean-polytope-3", 2},
                                                                          {"euclidean-polytope-8", 2}}) {
        const PolyhedralNorm phi = builtin_norm(name, d);
        const OperatorPair G = inf_laplacian_pair(phi);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k)
            worst = std::max(worst, compatibility_check(G, phi, random_mixed(rng, d), 4, kCompatTol, rng).max_violation);
        o.require(worst <= kCompatTol, name + "/d" + std::to_string(d) + " " + num(worst));
    }
    return o;
}

Outcome lattice_compat() {
    Outcome o;
    Rng rng(4);
    double wrong = 0.0;
    for (const std::string en : {"z2", "z3"}) {
        const EdgeSet E = builtin_edges(en);
        const PolyhedralNorm under = derived_norm(E);
        const PolyhedralNorm l1 = builtin_norm("l1", E.dim());
        for (const OperatorPair& pair : {F_median_pair(E), F_alpha_pair(E, 1.5)}) {
            double worst = 0.0;
            for (int k = 0; k < 100; ++k) {
                const Vec p = random_mixed(rng, E.dim());
                worst = std::max(worst, compatibility_check(pair, under, p, 4, kCompatTol, rng).max_violation);
                wrong = std::max(wrong, compatibility_check(pair, l1, p, 4, kCompatTol, rng).max_violation);
            }
            o.require(worst <= kCompatTol, pair.label + " " + num(worst));
        }
    }
    o.require(wrong > kNegativeControl, "against l1 " + num(wrong));
    return o;
}

Outcome shielding() {
    Outcome o;
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const MollifiedGauge g = make_mollified_gauge(l1, 0.05);
    Rng rng(5);
    double dual = 0.0, mem = 0.0, ker = 0.0, fd = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Vec w = rng.unit_vec(2);
        const Vec q = w * (rng.uniform(0.5, 1.0) / norm_eval(l1, w));
        const ShieldingReport r = shielding_verify(g, q, kShieldTol);
        dual = std::max(dual, r.dual_residual);
        mem = std::max(mem, r.membership_residual);
        ker = std::max(ker, r.kernel_residual);
        fd = std::max(fd, (r.hess.mat() - fd_hessian(g, q, 1e-4)).norm() / std::max(1.0, r.hess.norm()));
    }
    o.require(dual <= kShieldTol, "dual " + num(dual));
    o.require(mem <= kShieldTol, "membership " + num(mem));
    o.require(ker <= kShieldTol, "kernel " + num(ker));
    o.require(fd <= kHessFdTol, "hessian vs fd " + num(fd));
    return o;
}

Outcome approximation() {
    Outcome o;
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const ApproxNorm psi = approx_norm(make_mollified_gauge(l1, kApproxEps), kApproxLevel, kApproxCore);
    Rng rng(6);
    const double err = approx_norm_error(psi, l1, 1000, rng);
    o.require(err <= kApproxTol, "error " + num(err));
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec e = rng.unit_vec(2);
        const Vec p = approx_norm_gradient(psi, e);
        const SymMatrix H = approx_norm_hessian(psi, e);
        worst = std::max(worst, subspace_residual(matrix_space_support(l1, p), H));
    }
    o.require(worst <= kMembershipTol, "membership " + num(worst));
    return o;
}

Outcome ordering() {
    Outcome o;
    append_checks(o, ordering_suite(OrderingOptions{}));
    return o;
}

Outcome convergence() {
    Outcome o;
    for (double alpha : {1.0, kAlphaInfinity}) {
        ConvergenceOptions opt;
        opt.alpha = alpha;
        opt.ratio_tol = kRatioTol;
        const BenchReport r = convergence_test(opt);
        for (const Check& c : r.checks)
            o.require(c.pass, "alpha=" + format_alpha(alpha) + " " + c.name + " " + num(c.value));
    }
    return o;
}

Outcome calibration() {
    Outcome o;
    for (double alpha : {1.0, 2.0, kAlphaInfinity}) {
        CalibrationOptions opt;
        opt.alpha = alpha;
        const CalibrationResult r = calibration_oracle(opt);
        o.require(r.spread <= kSpreadTol && r.eps_drift <= kDriftTol,
                  "alpha=" + format_alpha(alpha) + " kappa " + num(r.kappa) + " spread " + num(r.spread) + " drift " +
                      num(r.eps_drift));
    }
    return o;
}

Outcome distance() {
    Outcome o;
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    const Domain2Poly sq = square_domain();
    const auto oracle = [](const Vec& x) { return std::min(1 - std::abs(x[0]), 1 - std::abs(x[1])); };
    const BenchReport d = distance_test(sq, l1, kGridH, oracle);
    for (const Check& c : d.checks)
        if (c.name == "sampled vs oracle") o.require(c.pass, "oracle " + num(c.value) + " <= " + num(c.tolerance));
    const EikonalStats st = eikonal_stats(sq, l1, kGridH);
    o.require(st.evaluated > 0 && st.max_residual <= kEikonalConstant * kGridH,
              "eikonal " + num(st.max_residual) + " over " + std::to_string(st.evaluated) + " points");
    const double lam = eigen_estimate(sq, l1, kGridH);
    o.require(std::abs(lam - 1.0) <= 2 * kGridH, "eigen " + num(lam));
    return o;
}

Outcome twod() {
    Outcome o;
    const TwodResult r = twod_analysis(builtin_norm("l1", 2), {0.1, 0.5, 1.0, 1.5, 2.0, 2.5});
    o.require(std::abs(r.diameter_sum - 8.0) <= kPerimeterTol && std::abs(r.perimeter - 8.0) <= kPerimeterTol,
              "sum " + num(r.diameter_sum) + " perimeter " + num(r.perimeter));
    bool monotone = true;
    for (size_t i = 1; i < r.counts.size(); ++i) monotone = monotone && r.counts[i] <= r.counts[i - 1];
    std::string counts;
    for (int c : r.counts) counts += (counts.empty() ? "" : ",") + std::to_string(c);
    o.require(monotone, "N(delta) " + counts);
    return o;
}

// Every bench suite at reduced size, twice with the same seed.
std::vector<std::string> suite_checksums() {
    std::vector<BenchReport> reps;
    OrderingOptions ord;
    ord.pairs = 2;
    ord.n = 16;
    ord.steps = 40;
    reps.push_back(ordering_suite(ord));
    CalibrationOptions cal;
    cal.alpha = 1.5;
    cal.trials = 5;
    reps.push_back(calibration_oracle(cal).report);
    ConvergenceOptions conv;
    conv.n = {8, 16, 32};
    conv.T = 0.02;
    reps.push_back(convergence_test(conv));
    const PolyhedralNorm l1 = builtin_norm("l1", 2);
    reps.push_back(distance_test(regular_polygon_domain(6), l1, 0.05));
    reps.push_back(eikonal_residual(regular_polygon_domain(6), l1, 0.05));
    Rng rng(7);
    reps.push_back(cone_comparison_test(l1, 0.05, 4, rng));
    reps.push_back(eigen_test(0.05));
    reps.push_back(twod_report(twod_analysis(l1, {0.5, 1.0}), "l1"));
    std::vector<std::string> out;
    for (const BenchReport& r : reps) out.push_back(sha256_hex(csv_text(r.table)));
    out.push_back(sha256_hex(csv_text(summary_table(reps))));
    return out;
}

Outcome reproducibility() {
    Outcome o;
    const auto a = suite_checksums();
    const auto b = suite_checksums();
    o.require(a == b, std::to_string(a.size()) + " tables compared");
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double time_limit;  // seconds, 0 for none
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "duality involution", involution, kTime1},
        {2, "l1 tangent space closed form", l1_closed_form, 0.0},
        {3, "infinity laplacian compatibility", inf_laplacian_compat, 0.0},
        {4, "lattice operator compatibility", lattice_compat, 0.0},
        {5, "shielding on the annulus", shielding, kTime5},
        {6, "approximating norm", approximation, 0.0},
        {7, "discrete comparison", ordering, kTime7},
        {8, "scheme convergence", convergence, kTime8},
        {9, "calibration", calibration, 0.0},
        {10, "distance and eikonal", distance, 0.0},
        {11, "two-dimensional analysis", twod, 0.0},
        {12, "reproducibility", reproducibility, 0.0},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit > 0.0) o.require(secs < c.time_limit, "runtime < " + num(c.time_limit) + " s");
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
