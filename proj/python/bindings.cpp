#include "quasidiff/boundary.hpp"
#include "quasidiff/config.hpp"
#include "quasidiff/kernel.hpp"
#include "quasidiff/oracle.hpp"
#include "quasidiff/simulate.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace qd;

namespace {

QuasiPair pair_from_json(const std::string& text) { return parse_pair(nlohmann::json::parse(text)).validate(); }

py::dict class_dict(const BoundaryClass& bc) {
    py::dict d;
    d["kind"] = to_string(bc.kind);
    d["refinement"] = bc.refinement ? py::object(py::str(to_string(*bc.refinement))) : py::object(py::none());
    d["instantaneous"] = bc.instantaneous ? py::object(py::bool_(*bc.instantaneous)) : py::object(py::none());
    d["sigma_hat"] = bc.sigma_hat.value;
    d["lambda_hat"] = bc.lambda_hat.value;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reproducing kernels and resolvents of quasidiffusions";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<InconclusiveError>(m, "InconclusiveError", PyExc_RuntimeError);

    py::class_<QuasiPair>(m, "Pair")
        .def_static("load", [](const std::string& path) { return load_pair(path).validate(); }, py::arg("path"))
        .def_static("from_json", &pair_from_json, py::arg("text"))
        .def_static("snapping_out", [](double kappa) { return snapping_out_pair(kappa).validate(); },
                    py::arg("kappa"))
        .def_property_readonly("l", &QuasiPair::l)
        .def_property_readonly("r", &QuasiPair::r)
        .def_property_readonly("l_hat", &QuasiPair::l_hat)
        .def_property_readonly("r_hat", &QuasiPair::r_hat)
        .def_property_readonly("strictness", [](const QuasiPair& p) { return to_string(p.strictness()); })
        .def("s", &QuasiPair::s, py::arg("x"))
        .def("s_left", &QuasiPair::s_left, py::arg("x"))
        .def("s_right", &QuasiPair::s_right, py::arg("x"))
        .def("to_json", [](const QuasiPair& p) { return to_json(p).dump(); });

    m.def("classify", [](const QuasiPair& p) { return class_dict(classify(p)); }, py::arg("pair"));

    py::class_<HarmonicSolution>(m, "Solution")
        .def_static(
            "build",
            [](const QuasiPair& p, double alpha, double tol, const std::string& gamma) {
                HarmonicOptions o;
                o.tol = tol;
                if (gamma == "bar")
                    o.gamma = GammaChoice::Bar;
                else if (gamma == "underline")
                    o.gamma = GammaChoice::Underline;
                else if (gamma != "auto")
                    throw ValidationError("gamma must be auto, bar or underline");
                return HarmonicSolution::build(p, alpha, o);
            },
            py::arg("pair"), py::arg("alpha"), py::arg("tol") = 1e-15, py::arg("gamma") = "auto")
        .def_property_readonly("alpha", &HarmonicSolution::alpha)
        .def_property_readonly("gamma_bar", &HarmonicSolution::gamma_bar)
        .def_property_readonly("gamma_underline", &HarmonicSolution::gamma_underline)
        .def_property_readonly("gamma", &HarmonicSolution::gamma_used)
        .def_property_readonly("wronskian", &HarmonicSolution::wronskian)
        .def("u", &HarmonicSolution::u, py::arg("x_hat"))
        .def("du", &HarmonicSolution::du, py::arg("x_hat"), py::arg("side") = 1)
        .def("u_minus", &HarmonicSolution::u_minus, py::arg("x_hat"))
        .def("u_plus", &HarmonicSolution::u_plus, py::arg("x_hat"))
        .def("v", &HarmonicSolution::v, py::arg("x_hat"))
        .def("phi", &HarmonicSolution::phi, py::arg("x_hat"))
        .def("grid", &HarmonicSolution::grid, py::arg("per_cell") = 0);

    py::class_<Kernel>(m, "Kernel")
        .def(py::init([](const HarmonicSolution& s, const std::string& regime, double c) {
                 return Kernel(s, parse_regime(regime), c);
             }),
             py::arg("solution"), py::arg("regime") = "plain", py::arg("c") = 1.0)
        .def("__call__", [](const Kernel& k, double x, double y) { return k(x, y); }, py::arg("x"), py::arg("y"))
        .def("star", [](const Kernel& k, double x, int xs, double y, int ys) {
                 return k(StarPoint{x, xs}, StarPoint{y, ys});
             },
             py::arg("x"), py::arg("x_side"), py::arg("y"), py::arg("y_side"))
        .def("eval_hat", &Kernel::eval_hat, py::arg("x_hat"), py::arg("y_hat"))
        .def("resolvent", [](const Kernel& k, const std::string& f, const std::vector<double>& xs) {
                 ResolventTable t(k, PiecewiseFunction::parse(f));
                 std::vector<double> out;
                 for (double x : xs) out.push_back(t(x));
                 return out;
             },
             py::arg("f"), py::arg("points"));

    m.def("snapping_out_kernel",
          [](double alpha, double kappa, double x, int xs, double y, int ys) {
              return snapping_out_kernel(alpha, kappa, {x, xs}, {y, ys});
          },
          py::arg("alpha"), py::arg("kappa"), py::arg("x"), py::arg("x_side") = 0, py::arg("y"),
          py::arg("y_side") = 0);

    m.def("calibrate", [](const std::vector<double>& alphas) {
              auto cal = calibrate_normalization(calibration_pairs(), alphas);
              py::dict d;
              d["c_prob"] = cal.c_prob;
              d["spread"] = cal.spread;
              d["consistent"] = cal.consistent;
              d["identity_factor"] = cal.identity_factor;
              return d;
          },
          py::arg("alphas") = std::vector<double>{0.5, 1.0, 2.0});

    m.def("bd_resolvent",
          [](int K, bool reflecting, double lam, const std::vector<double>& f) {
              auto ch = BDChain::regular_at_infinity(K, reflecting ? Truncation::ReflectingAtTop
                                                                   : Truncation::AbsorbingAtTop);
              return bd_matrix_resolvent(ch, lam, f);
          },
          py::arg("states"), py::arg("reflecting"), py::arg("lam"), py::arg("f"));

    m.def("laplace_chain",
          [](const QuasiPair& p, double x0, const std::string& f, double lam, long paths, double horizon,
             std::uint64_t seed) {
              auto ps = simulate_paths(p, x0, horizon, paths, seed, Sampler::Chain);
              auto e = laplace_functional(ps, PiecewiseFunction::parse(f), lam);
              return py::make_tuple(e.value, e.std_error);
          },
          py::arg("pair"), py::arg("x0"), py::arg("f"), py::arg("lam"), py::arg("paths") = 10000,
          py::arg("horizon") = 30.0, py::arg("seed") = 1);
}
