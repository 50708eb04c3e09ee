#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "freespectra/error.hpp"
#include "freespectra/linearize.hpp"
#include "freespectra/ncalg.hpp"
#include "freespectra/rmt.hpp"
#include "freespectra/spectra.hpp"
#include "freespectra/subord.hpp"

namespace py = pybind11;
using namespace fsp;

namespace {

py::dict density_dict(const DensityGrid& d) {
  py::dict out;
  out["x"] = d.points;
  out["density"] = d.values;
  out["converged"] = std::vector<bool>(d.converged.begin(), d.converged.end());
  out["mass"] = d.mass;
  out["eps"] = d.eps;
  return out;
}

py::dict support_dict(const SupportSet& s) {
  py::dict out;
  out["intervals"] = s.intervals;
  out["atoms"] = s.atoms;
  out["eps"] = s.eps;
  out["threshold"] = s.threshold;
  return out;
}

SweepOptions sweep(int threads) {
  SweepOptions o;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Operator-valued free probability spectra and random matrix checks";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<StructureError>(m, "StructureError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  py::class_<NCPolynomial>(m, "Polynomial")
      .def_property_readonly("arity", &NCPolynomial::arity)
      .def_property_readonly("degree", &NCPolynomial::degree)
      .def("to_string", &NCPolynomial::to_string, py::arg("semicircular_count") = -1)
      .def("__repr__", [](const NCPolynomial& p) { return "Polynomial(" + p.to_string() + ")"; })
      .def("__eq__", [](const NCPolynomial& a, const NCPolynomial& b) { return a == b; });

  m.def(
      "parse",
      [](const std::string& text, int r, int t) { return parse_polynomial(text, r, t); },
      py::arg("text"), py::arg("r"), py::arg("t") = 0,
      "Parse a polynomial in x1..xr (semicircular) and a1..at (deterministic).");
  m.def("evaluate", [](const NCPolynomial& p, const std::vector<CMatrix>& args) { return evaluate(p, args); },
        py::arg("polynomial"), py::arg("args"));
  m.def("adjoint", &adjoint);

  m.def(
      "linearize",
      [](const NCPolynomial& p) {
        const auto lin = linearize(p);
        py::dict out;
        out["m"] = lin.m;
        out["gamma"] = lin.gamma;
        out["zetas"] = lin.zetas;
        return out;
      },
      py::arg("polynomial"), "Self-adjoint linearization as {m, gamma, zetas}.");

  py::class_<ModelSpec>(m, "Model")
      .def(py::init<CMatrix, std::vector<CMatrix>, std::vector<CMatrix>, std::vector<CMatrix>>(), py::arg("gamma"),
           py::arg("alphas"), py::arg("betas") = std::vector<CMatrix>{}, py::arg("dets") = std::vector<CMatrix>{})
      .def_static("semicircle", &ModelSpec::semicircle)
      .def_static(
          "from_polynomial",
          [](const NCPolynomial& p, int r, std::vector<CMatrix> dets) {
            return ModelSpec::from_linearization(linearize(p), r, std::move(dets));
          },
          py::arg("polynomial"), py::arg("r"), py::arg("dets") = std::vector<CMatrix>{})
      .def_property_readonly("m", &ModelSpec::m)
      .def_property_readonly("r", &ModelSpec::r)
      .def_property_readonly("t", &ModelSpec::t)
      .def_property_readonly("n", &ModelSpec::n)
      .def_property_readonly("gamma", &ModelSpec::gamma)
      .def_property_readonly("alphas", &ModelSpec::alphas)
      .def_property_readonly("betas", &ModelSpec::betas);

  m.def(
      "solve",
      [](const ModelSpec& model, const CMatrix& lambda) {
        const auto s = solve_subordination(model, HalfPlanePoint(lambda));
        py::dict out;
        out["omega"] = s.omega;
        out["gtilde"] = s.gtilde;
        out["residual"] = s.residual;
        out["iterations"] = s.iterations;
        out["converged"] = s.converged;
        return out;
      },
      py::arg("model"), py::arg("lam"), "Subordination fixed point at a matrix in the upper half-plane.");
  m.def(
      "stieltjes",
      [](const ModelSpec& model, cplx z, double eps) { return scalar_gtilde(model, z, eps); }, py::arg("model"),
      py::arg("z"), py::arg("eps") = 0.0);

  m.def(
      "density",
      [](const ModelSpec& model, const std::vector<double>& grid, double eps, int threads) {
        return density_dict(density_of_model(model, grid, eps, sweep(threads)));
      },
      py::arg("model"), py::arg("grid"), py::arg("eps") = 1e-3, py::arg("threads") = 1);
  m.def(
      "polynomial_density",
      [](const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, const std::vector<double>& grid, double eps,
         int threads) { return density_dict(polynomial_distribution(p, r, dets, grid, eps, sweep(threads))); },
      py::arg("polynomial"), py::arg("r"), py::arg("dets"), py::arg("grid"), py::arg("eps") = 1e-3,
      py::arg("threads") = 1);
  m.def(
      "support",
      [](const ModelSpec& model, double eps, double threshold, int threads) {
        return support_dict(support_of_model(model, eps, threshold, sweep(threads)));
      },
      py::arg("model"), py::arg("eps") = 1e-3, py::arg("threshold") = 1e-3, py::arg("threads") = 1);
  m.def(
      "polynomial_support",
      [](const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, double eps, double threshold, int threads) {
        return support_dict(polynomial_support(p, r, dets, eps, threshold, sweep(threads)));
      },
      py::arg("polynomial"), py::arg("r"), py::arg("dets"), py::arg("eps") = 1e-3, py::arg("threshold") = 1e-3,
      py::arg("threads") = 1);
  m.def(
      "norm",
      [](const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, double eps) {
        return norm_of_polynomial(p, r, dets, eps);
      },
      py::arg("polynomial"), py::arg("r"), py::arg("dets") = std::vector<CMatrix>{}, py::arg("eps") = 1e-3);

  m.def(
      "sample_wigner",
      [](int n, const std::string& law, std::uint64_t seed, std::uint64_t stream) {
        return sample_wigner(n, EntryLaw::from_string(law), seed, stream).matrix;
      },
      py::arg("n"), py::arg("law") = "gaussian", py::arg("seed") = 0, py::arg("stream") = 0,
      "Normalized Hermitian Wigner matrix X / sqrt(n).");
  m.def(
      "deterministic",
      [](const std::string& kind, const std::vector<double>& values, int n) {
        if (kind == "diag") return make_deterministic(DetSpec::diag(values), n);
        if (kind == "toeplitz") return make_deterministic(DetSpec::toeplitz(values), n);
        if (kind == "projection" && values.size() == 1) return make_deterministic(DetSpec::projection(values[0]), n);
        throw ParameterError("unknown deterministic kind '" + kind + "'");
      },
      py::arg("kind"), py::arg("values"), py::arg("n"));
  m.def("eigenvalues", &hermitian_eigenvalues, py::arg("matrix"));
}
