#include "finslab/core.hpp"
#include "finslab/lattice.hpp"
#include "finslab/operators.hpp"
#include "finslab/shielding.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace finslab;

namespace {

Trajectory run_scheme(const std::string& edges, double alpha, int n, double eps, int steps,
                      const std::string& boundary, const std::function<double(const Vec&)>& datum) {
    SchemeConfig cfg{builtin_lattice(edges == "triangular" ? "triangular" : "z" + std::to_string(builtin_edges(edges).dim())),
                     builtin_edges(edges)};
    cfg.alpha = alpha;
    cfg.window.assign(static_cast<size_t>(cfg.lattice.dim()), n);
    cfg.eps = eps;
    cfg.steps = steps;
    cfg.stride = std::max(steps, 1);
    cfg.boundary = parse_boundary(boundary);
    return evolve(cfg, InitialDatum{"python", datum});
}

}  // namespace

PYBIND11_MODULE(_finslab, m) {
    m.doc() = "Polyhedral Finsler norms, lattice schemes and shielding norms.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<PolyhedralNorm>(m, "PolyhedralNorm")
        .def(py::init<std::vector<Vec>, std::string>(), py::arg("points"), py::arg("name") = "")
        .def_property_readonly("dim", &PolyhedralNorm::dim)
        .def_property_readonly("name", &PolyhedralNorm::name)
        .def_property_readonly("generators", &PolyhedralNorm::generators)
        .def_property_readonly("primal_vertices", &PolyhedralNorm::primal_vertices)
        .def_property_readonly("symmetric", &PolyhedralNorm::symmetric)
        .def_property_readonly("lipschitz", &PolyhedralNorm::lipschitz)
        .def("dual", &PolyhedralNorm::dual)
        .def("__call__", [](const PolyhedralNorm& phi, const Vec& q) { return norm_eval(phi, q); })
        .def("dual_value", [](const PolyhedralNorm& phi, const Vec& p) { return dual_norm_eval(phi, p); })
        .def("subdifferential", [](const PolyhedralNorm& phi, const Vec& q) { return subdifferential(phi, q).vertices; })
        .def("tangent_space",
             [](const PolyhedralNorm& phi, const Vec& p) { return tangent_space(phi, p).basis; })
        .def("matrix_space_dim",
             [](const PolyhedralNorm& phi, const Vec& p) { return matrix_space_support(phi, p).dim(); })
        .def("__repr__", [](const PolyhedralNorm& phi) {
            return "<PolyhedralNorm " + phi.name() + " d=" + std::to_string(phi.dim()) + " generators=" +
                   std::to_string(phi.generators().size()) + ">";
        });

    m.def("builtin_norm", &builtin_norm, py::arg("name"), py::arg("dim"));
    m.def("derived_norm", [](const std::string& edges) { return derived_norm(builtin_edges(edges)); },
          py::arg("edges"));

    m.def("median", [](const std::vector<double>& v) { return median(v); });
    m.def("m_alpha", [](const std::vector<double>& v, double alpha) { return m_alpha(v, alpha); }, py::arg("values"),
          py::arg("alpha"));

    m.def(
        "evolve",
        [](const std::string& edges, double alpha, int n, double eps, int steps, const std::string& boundary,
           const std::function<double(const Vec&)>& datum) {
            const Trajectory t = run_scheme(edges, alpha, n, eps, steps, boundary, datum);
            return t.snapshots.back().values;
        },
        py::arg("edges"), py::arg("alpha"), py::arg("n"), py::arg("eps"), py::arg("steps"),
        py::arg("boundary") = "periodic", py::arg("datum"),
        "Final field of the lattice scheme on an n^d window, row-major with the last axis fastest.");

    py::class_<ShieldingReport>(m, "ShieldingReport")
        .def_readonly("grad", &ShieldingReport::grad)
        .def_property_readonly("hess", [](const ShieldingReport& r) { return r.hess.mat(); })
        .def_readonly("dual_residual", &ShieldingReport::dual_residual)
        .def_readonly("membership_residual", &ShieldingReport::membership_residual)
        .def_readonly("kernel_residual", &ShieldingReport::kernel_residual)
        .def_readonly("passed", &ShieldingReport::pass);

    m.def(
        "shielding_verify",
        [](const PolyhedralNorm& phi, double eps, const Vec& q, double tol) {
            return shielding_verify(make_mollified_gauge(phi, eps), q, tol);
        },
        py::arg("norm"), py::arg("eps"), py::arg("q"), py::arg("tol") = 1e-6);
    m.def(
        "mollified_value",
        [](const PolyhedralNorm& phi, double eps, const Vec& q) {
            return mollified_value(make_mollified_gauge(phi, eps), q);
        },
        py::arg("norm"), py::arg("eps"), py::arg("q"));
}
