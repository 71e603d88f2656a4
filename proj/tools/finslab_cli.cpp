#include "finslab/bench.hpp"
#include "finslab/io.hpp"
#include "finslab/shielding.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace fs = std::filesystem;
using namespace finslab;

namespace {

enum Exit { kOk = 0, kCheckFail = 1, kConfig = 2, kNumeric = 3 };

struct Invocation {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out;
};

Json build_config(const Invocation& inv) {
    Json cfg = inv.config_file.empty() ? Json::object() : load_config(inv.config_file);
    for (const std::string& o : inv.overrides) apply_override(cfg, o);
    return cfg;
}

fs::path output_dir(const Invocation& inv, const std::string& leaf) {
    if (!inv.out.empty()) return inv.out;
    return default_output_root() / leaf;
}

template <class T>
T get(const Json& cfg, const std::string& key, T fallback) {
    if (!cfg.contains(key)) return fallback;
    try {
        return cfg.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

double alpha_of(const Json& v) {
    if (v.is_number()) return parse_alpha(format_double(v.get<double>()));
    if (v.is_string()) return parse_alpha(v.get<std::string>());
    throw ConfigError("alpha must be a number or \"inf\"");
}

std::vector<double> alphas_of(const Json& cfg, const std::vector<double>& fallback) {
    if (!cfg.contains("alphas")) return fallback;
    const Json& a = cfg.at("alphas");
    if (!a.is_array() || a.empty()) throw ConfigError("'alphas' must be a non-empty array");
    std::vector<double> out;
    for (const Json& v : a) out.push_back(alpha_of(v));
    return out;
}

Vec vec_of(const Json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) throw ConfigError("'" + key + "' must be a numeric array");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError("'" + key + "' must be a numeric array");
        out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
}

Mat mat_of(const Json& v, const std::string& key) {
    if (!v.is_array() || v.empty()) throw ConfigError("'" + key + "' must be a matrix (array of rows)");
    const Vec first = vec_of(v[0], key);
    Mat m(static_cast<Eigen::Index>(v.size()), first.size());
    for (size_t i = 0; i < v.size(); ++i) {
        const Vec row = vec_of(v[i], key);
        if (row.size() != first.size()) throw ConfigError("'" + key + "' has ragged rows");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

std::vector<std::string> coord_columns(const std::string& prefix, int d) {
    std::vector<std::string> c;
    for (int i = 0; i < d; ++i) c.push_back(prefix + std::to_string(i));
    return c;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

void print_checks(const std::vector<BenchReport>& reports) {
    for (const BenchReport& r : reports)
        for (const Check& c : r.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << r.name << ": " << c.name << " = " << format_double(c.value)
                      << " (tol " << format_double(c.tolerance) << ")\n";
}

int finish(RunRecorder& rec, const std::vector<BenchReport>& reports) {
    Table summary = summary_table(reports);
    rec.write_csv("summary.csv", summary);
    for (const BenchReport& r : reports) rec.add_timing(r.name, r.runtime_s);
    const bool ok = std::all_of(reports.begin(), reports.end(), [](const BenchReport& r) { return r.pass(); });
    const int code = ok ? kOk : kCheckFail;
    rec.write_manifest(code);
    print_checks(reports);
    std::cout << "outputs: " << rec.dir().string() << "\n";
    return code;
}

// ------------------------------------------------------------------ norms

int cmd_norms(const Invocation& inv) {
    const Json cfg = build_config(inv);
    const int dim = get<int>(cfg, "dim", 2);
    const PolyhedralNorm phi = resolve_norm(get<std::string>(cfg, "norm", "l1"), dim);
    const int d = phi.dim();
    const int samples = get<int>(cfg, "samples", 1000);
    if (samples < 1) throw ConfigError("'samples' must be positive");
    Rng rng(get<std::uint64_t>(cfg, "seed", 1));
    RunRecorder rec(output_dir(inv, "norms"), "norms", cfg);

    Table gens;
    gens.columns = concat({"index"}, coord_columns("p", d));
    for (size_t i = 0; i < phi.generators().size(); ++i) {
        RowBuilder row;
        row << static_cast<int>(i);
        for (int k = 0; k < d; ++k) row << phi.generators()[i][k];
        gens.add_row(row.take());
    }
    rec.write_csv("dual_vertices.csv", gens);

    Table prim;
    prim.columns = concat({"index"}, coord_columns("q", d));
    for (size_t i = 0; i < phi.primal_vertices().size(); ++i) {
        RowBuilder row;
        row << static_cast<int>(i);
        for (int k = 0; k < d; ++k) row << phi.primal_vertices()[i][k];
        prim.add_row(row.take());
    }
    rec.write_csv("primal_vertices.csv", prim);

    Table vals;
    vals.columns = concat(concat({"index"}, coord_columns("q", d)), {"phi", "phi_dual", "subdiff_dim"});
    std::vector<int> hist(static_cast<size_t>(d), 0);
    for (int s = 0; s < samples; ++s) {
        const Vec q = rng.unit_vec(d);
        const int fd = subdifferential(phi, q).dim;
        ++hist[static_cast<size_t>(fd)];
        RowBuilder row;
        row << s;
        for (int k = 0; k < d; ++k) row << q[k];
        row << norm_eval(phi, q) << dual_norm_eval(phi, q) << fd;
        vals.add_row(row.take());
    }
    rec.write_csv("gauge_samples.csv", vals);

    std::vector<int> vhist(static_cast<size_t>(d), 0);
    for (const Vec& v : phi.primal_vertices()) ++vhist[static_cast<size_t>(subdifferential(phi, v).dim)];
    Table h;
    h.columns = {"dim", "random_directions", "primal_vertices"};
    for (int k = 0; k < d; ++k) h.add_row((RowBuilder() << k << hist[static_cast<size_t>(k)] << vhist[static_cast<size_t>(k)]).take());
    rec.write_csv("subdiff_hist.csv", h);
    rec.write_manifest(kOk);
    std::cout << phi.name() << " (d = " << d << "): " << phi.generators().size() << " dual vertices, "
              << phi.primal_vertices().size() << " primal vertices\noutputs: " << rec.dir().string() << "\n";
    return kOk;
}

// ----------------------------------------------------------------- shield

int cmd_shield(const Invocation& inv) {
    const auto t0 = std::chrono::steady_clock::now();
    const Json cfg = build_config(inv);
    const PolyhedralNorm phi = resolve_norm(get<std::string>(cfg, "norm", "l1"), get<int>(cfg, "dim", 2));
    const double eps = get<double>(cfg, "eps", 0.05);
    const double c = get<double>(cfg, "c", 0.5);
    const int samples = get<int>(cfg, "samples", 200);
    const double tol = get<double>(cfg, "tol", 1e-6);
    if (!(c > 0.0) || samples < 1) throw ConfigError("'c' and 'samples' must be positive");
    Rng rng(get<std::uint64_t>(cfg, "seed", 1));
    const MollifiedGauge g = make_mollified_gauge(phi, eps);
    RunRecorder rec(output_dir(inv, "shield"), "shield", cfg);

    const int d = phi.dim();
    Table t;
    t.columns = concat(concat({"index"}, coord_columns("q", d)),
                       {"dual_residual", "membership_residual", "kernel_residual", "pass"});
    BenchReport rep;
    rep.name = "shield";
    rep.config = {{"c", format_double(c)}, {"eps", format_double(eps)}, {"norm", phi.name()},
                  {"samples", std::to_string(samples)}, {"tol", format_double(tol)}};
    const double eps_c = eps_c_estimate(phi, c, 200, get<std::uint64_t>(cfg, "seed", 1));
    rep.config.emplace_back("eps_c_estimate", format_double(eps_c));
    std::cout << "note: eps_c estimate " << format_double(eps_c)
              << " comes from a sampled search and may overestimate" << (eps > eps_c ? "; eps exceeds it" : "")
              << "\n";
    double worst = 0.0;
    int failures = 0;
    for (int s = 0; s < samples; ++s) {
        const Vec dir = rng.unit_vec(d);
        const Vec q = dir * (c * rng.uniform(1.0, 2.0) / norm_eval(phi, dir));
        const ShieldingReport r = shielding_verify(g, q, tol);
        worst = std::max({worst, r.dual_residual, r.membership_residual, r.kernel_residual});
        failures += r.pass ? 0 : 1;
        RowBuilder row;
        row << s;
        for (int k = 0; k < d; ++k) row << q[k];
        row << r.dual_residual << r.membership_residual << r.kernel_residual << r.pass;
        t.add_row(row.take());
    }
    rec.write_csv("shield_samples.csv", t);
    rep.check_le("failed samples", failures, 0.0);
    rep.check_le("worst residual", worst, tol);
    rep.table = t;
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish(rec, {rep});
}

// --------------------------------------------------------------- simulate

InitialDatum datum_of(const Json& cfg, int d) {
    const Json spec = cfg.contains("datum") ? cfg.at("datum") : Json{{"name", "sine"}};
    const Json obj = spec.is_string() ? Json{{"name", spec}} : spec;
    if (!obj.is_object()) throw ConfigError("'datum' must be a name or an object");
    const std::string name = get<std::string>(obj, "name", "sine");
    if (name == "linear") return linear_datum(obj.contains("p") ? vec_of(obj.at("p"), "datum.p") : Vec::Ones(d));
    if (name == "quadratic") {
        const Vec p = obj.contains("p") ? vec_of(obj.at("p"), "datum.p") : Vec::Zero(d);
        const SymMatrix X = obj.contains("X") ? SymMatrix(mat_of(obj.at("X"), "datum.X")) : SymMatrix::identity(d);
        return quadratic_datum(p, X);
    }
    if (name == "sine") return sine_datum(get<double>(obj, "amplitude", 1.0), get<double>(obj, "frequency", 1.0));
    if (name == "bump")
        return bump_datum(obj.contains("center") ? vec_of(obj.at("center"), "datum.center") : Vec::Constant(d, 0.5),
                          get<double>(obj, "radius", 0.25), get<double>(obj, "amplitude", 1.0));
    throw ConfigError("unknown datum '" + name + "' (linear, quadratic, sine, bump)");
}

int cmd_simulate(const Invocation& inv) {
    const auto t0 = std::chrono::steady_clock::now();
    const Json cfg = build_config(inv);
    const Json lat_spec = cfg.contains("lattice") ? cfg.at("lattice") : Json("z2");
    const Lattice lat = lat_spec.is_string() ? builtin_lattice(lat_spec.get<std::string>())
                                             : make_lattice(mat_of(lat_spec, "lattice"));
    const int d = lat.dim();
    SchemeConfig sc{lat, resolve_edges(get<std::string>(cfg, "edges", "z" + std::to_string(d)))};
    sc.alpha = cfg.contains("alpha") ? alpha_of(cfg.at("alpha")) : 1.0;
    sc.window = cfg.contains("window") ? get<std::vector<int>>(cfg, "window", {})
                                       : std::vector<int>(static_cast<size_t>(d), 32);
    sc.eps = get<double>(cfg, "eps", 1.0 / 32);
    sc.steps = get<int>(cfg, "steps", 100);
    sc.stride = get<int>(cfg, "stride", std::max(1, sc.steps));
    sc.boundary = parse_boundary(get<std::string>(cfg, "boundary", "periodic"));
    const InitialDatum u0 = datum_of(cfg, d);
    const Scheme scheme(sc, &u0);
    RunRecorder rec(output_dir(inv, "simulate"), "simulate", cfg);
    const Trajectory traj = evolve(scheme, scheme.sample(u0));

    const auto header = concat(concat({"site"}, coord_columns("i", d)), concat(coord_columns("x", d), {"value"}));
    for (size_t k = 0; k < traj.snapshots.size(); ++k) {
        Table t;
        t.columns = header;
        const Field& f = traj.snapshots[k];
        for (int s = 0; s < scheme.sites(); ++s) {
            const IVec idx = scheme.site_index(s);
            const Vec x = scheme.position(idx);
            RowBuilder row;
            row << s;
            for (int a = 0; a < d; ++a) row << static_cast<long long>(idx[a]);
            for (int a = 0; a < d; ++a) row << x[a];
            row << f.values[static_cast<size_t>(s)];
            t.add_row(row.take());
        }
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%06d.csv", traj.steps[k]);
        rec.write_csv(name, t);
    }
    rec.add_timing("simulate", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    rec.write_manifest(kOk);
    std::cout << traj.snapshots.size() << " snapshots, " << scheme.sites() << " sites\noutputs: " << rec.dir().string()
              << "\n";
    return kOk;
}

// ------------------------------------------------------------------ bench

Domain2Poly domain_of(const std::string& name) {
    if (name == "square") return square_domain(1.0);
    if (name == "hexagon") return regular_polygon_domain(6);
    if (name.rfind("polygon-", 0) == 0) {
        try {
            return regular_polygon_domain(std::stoi(name.substr(8)));
        } catch (const std::logic_error&) {
        }
    }
    throw ConfigError("unknown domain '" + name + "' (square, hexagon, polygon-<k>)");
}

std::vector<double> doubles_of(const Json& cfg, const std::string& key, std::vector<double> fallback) {
    return get<std::vector<double>>(cfg, key, std::move(fallback));
}

std::vector<BenchReport> bench_ordering(const Json& cfg) {
    OrderingOptions o;
    o.alphas = alphas_of(cfg, o.alphas);
    o.pairs = get<int>(cfg, "pairs", o.pairs);
    o.n = get<int>(cfg, "n", o.n);
    o.steps = get<int>(cfg, "steps", o.steps);
    o.edges = get<std::string>(cfg, "edges", o.edges);
    o.seed = get<std::uint64_t>(cfg, "seed", o.seed);
    return {ordering_suite(o)};
}

std::vector<BenchReport> bench_calibrate(const Json& cfg) {
    std::vector<BenchReport> out;
    for (double a : alphas_of(cfg, {1.0, 2.0, kAlphaInfinity})) {
        CalibrationOptions o;
        o.alpha = a;
        o.edges = get<std::string>(cfg, "edges", o.edges);
        o.trials = get<int>(cfg, "trials", o.trials);
        o.eps = doubles_of(cfg, "eps", o.eps);
        o.seed = get<std::uint64_t>(cfg, "seed", o.seed);
        CalibrationResult r = calibration_oracle(o);
        r.report.name = "calibration_alpha-" + format_alpha(a);
        out.push_back(std::move(r.report));
    }
    return out;
}

std::vector<BenchReport> bench_converge(const Json& cfg) {
    std::vector<BenchReport> out;
    for (double a : alphas_of(cfg, {1.0, kAlphaInfinity})) {
        ConvergenceOptions o;
        o.alpha = a;
        o.edges = get<std::string>(cfg, "edges", o.edges);
        o.T = get<double>(cfg, "T", o.T);
        o.n = get<std::vector<int>>(cfg, "n", o.n);
        o.datum = get<std::string>(cfg, "datum", o.datum);
        BenchReport r = convergence_test(o);
        r.name = "convergence_alpha-" + format_alpha(a);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<BenchReport> bench_distance(const Json& cfg) {
    const std::string dname = get<std::string>(cfg, "domain", "square");
    const std::string nname = get<std::string>(cfg, "norm", "l1");
    const Domain2Poly dom = domain_of(dname);
    const PolyhedralNorm phi = resolve_norm(nname, 2);
    const double h = get<double>(cfg, "h", 0.01);
    std::function<double(const Vec&)> oracle;
    if (dname == "square" && nname == "l1")
        oracle = [](const Vec& x) { return std::min(1.0 - std::abs(x[0]), 1.0 - std::abs(x[1])); };
    BenchReport d = distance_test(dom, phi, h, oracle);
    BenchReport e = eikonal_residual(dom, phi, h, get<double>(cfg, "eikonal_constant", 5.0));
    d.config.emplace_back("domain", dname);
    e.config.emplace_back("domain", dname);
    return {d, e};
}

std::vector<BenchReport> bench_cones(const Json& cfg) {
    Rng rng(get<std::uint64_t>(cfg, "seed", 1));
    BenchReport r = cone_comparison_test(resolve_norm(get<std::string>(cfg, "norm", "l1"), 2),
                                         get<double>(cfg, "h", 0.02), get<int>(cfg, "trials", 20), rng);
    r.config.emplace_back("seed", std::to_string(get<std::uint64_t>(cfg, "seed", 1)));
    return {r};
}

std::vector<BenchReport> bench_eigen(const Json& cfg) { return {eigen_test(get<double>(cfg, "h", 0.01))}; }

std::vector<BenchReport> bench_twod(const Json& cfg) {
    const std::string name = get<std::string>(cfg, "norm", "l1");
    const std::vector<double> deltas = doubles_of(cfg, "deltas", {0.0, 0.5, 1.0, 2.0, 4.0});
    if (name == "euclidean" || name == "quartic") return {twod_report(twod_analysis_smooth(deltas), name)};
    return {twod_report(twod_analysis(resolve_norm(name, 2), deltas), name)};
}

using BenchFn = std::vector<BenchReport> (*)(const Json&);
const std::vector<std::pair<std::string, BenchFn>>& bench_table() {
    static const std::vector<std::pair<std::string, BenchFn>> t = {
        {"ordering", bench_ordering}, {"calibrate", bench_calibrate}, {"converge", bench_converge},
        {"distance", bench_distance}, {"cones", bench_cones},         {"eigen", bench_eigen},
        {"twod", bench_twod}};
    return t;
}

int run_bench(const Invocation& inv, const std::string& sub, const std::string& leaf) {
    const Json cfg = build_config(inv);
    std::vector<BenchReport> reports;
    for (const auto& [name, fn] : bench_table()) {
        if (sub != "all" && sub != name) continue;
        // In a combined run each bench reads its own section when present.
        const Json& section = sub == "all" && cfg.contains(name) ? cfg.at(name) : cfg;
        for (BenchReport& r : fn(section)) reports.push_back(std::move(r));
    }
    RunRecorder rec(output_dir(inv, leaf), leaf == "twod" ? "twod" : "bench " + sub, cfg);
    for (const BenchReport& r : reports) rec.write_csv(r.name + ".csv", r.table);
    return finish(rec, reports);
}

void add_common(CLI::App* app, Invocation& inv) {
    app->add_option("-c,--config", inv.config_file, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("-s,--set", inv.overrides, "override key=value (repeatable)");
    app->add_option("-o,--out", inv.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finsler norm, shielding and lattice-scheme toolkit"};
    app.require_subcommand(1);
    Invocation inv;
    auto* norms = app.add_subcommand("norms", "dual/primal vertices, gauge samples, subdifferential histogram");
    auto* shield = app.add_subcommand("shield", "verify the mollified gauge on an annulus");
    auto* simulate = app.add_subcommand("simulate", "run the lattice scheme and write snapshots");
    auto* twod = app.add_subcommand("twod", "non-differentiability directions of a planar norm");
    auto* bench = app.add_subcommand("bench", "verification benches");
    bench->require_subcommand(1);
    for (auto* a : {norms, shield, simulate, twod}) add_common(a, inv);
    std::string bench_sub;
    for (const auto& [name, fn] : bench_table()) {
        auto* s = bench->add_subcommand(name);
        add_common(s, inv);
        s->callback([&bench_sub, n = name] { bench_sub = n; });
    }
    auto* all = bench->add_subcommand("all", "every bench; per-bench sections of the config apply");
    add_common(all, inv);
    all->callback([&bench_sub] { bench_sub = "all"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*norms) return cmd_norms(inv);
        if (*shield) return cmd_shield(inv);
        if (*simulate) return cmd_simulate(inv);
        if (*twod) return run_bench(inv, "twod", "twod");
        return run_bench(inv, bench_sub, "bench-" + bench_sub);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    }
}
