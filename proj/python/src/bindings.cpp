#include "chronoscale/cli.hpp"
#include "chronoscale/lyapunov.hpp"
#include "chronoscale/scales.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace chronoscale;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

// Coefficients and systems use the CLI JSON forms so no Python callable is
// invoked from library worker threads.
json to_json(const py::handle& obj) {
  const py::module_ pyjson = py::module_::import("json");
  return json::parse(py::cast<std::string>(pyjson.attr("dumps")(obj)));
}

ScalarCoefficient coefficient(const py::object& p) { return cli::coefficient_from_json(to_json(p)); }

Window window_of(const std::pair<double, double>& w) { return {w.first, w.second}; }

MatrixFunction system(const py::object& a, const Grid& g) {
  if (py::isinstance<py::dict>(a)) return cli::system_from_json(to_json(a), g);
  return MatrixFunction::constant_matrix(py::cast<MatrixXd>(a));
}

Forcing forcing(const py::object& f, int dim) {
  if (f.is_none()) return zero_forcing(dim);
  return cli::forcing_from_json(to_json(f), dim);
}

py::dict grid_dict(const Grid& g) {
  std::vector<double> mu(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) mu[k] = g[k].mu;
  py::dict d;
  d["t"] = g.times();
  d["mu"] = mu;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dynamic equations on time scales";
  // ChronoscaleError(kind, message); the handle stays alive for the interpreter's lifetime.
  static py::handle error_type = py::exception<Error>(m, "ChronoscaleError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(error_type.ptr(), py::make_tuple(to_string(e.kind()), e.what()).ptr());
    }
  });

  py::class_<TimeScale>(m, "TimeScale")
      .def(py::init([](const std::string& d) { return parse_scale(d); }),
           py::arg("descriptor"))
      .def("contains", &TimeScale::contains)
      .def("forward_jump", &TimeScale::forward_jump)
      .def("graininess", &TimeScale::graininess)
      .def("mu_star", py::overload_cast<>(&TimeScale::mu_star, py::const_))
      .def("nu_star", &TimeScale::nu_star)
      .def("is_syndetic", &TimeScale::is_syndetic)
      .def_property_readonly("inf", &TimeScale::inf)
      .def_property_readonly("sup", &TimeScale::sup)
      .def("grid", [](const TimeScale& s, std::pair<double, double> w, double h) {
        return grid_dict(build_grid(s, window_of(w), h));
      }, py::arg("window"), py::arg("h") = 0.01);

  m.def("hilger_exp", [](const TimeScale& s, const py::object& p, double t, double from, double h) {
    const Grid g = build_grid(s, {std::min(t, from), std::max(t, from)}, h);
    return hilger_exp(coefficient(p), t, from, g);
  }, py::arg("scale"), py::arg("p"), py::arg("t"), py::arg("s"), py::arg("h") = 0.01,
        "e_p(t, s); p is a number or a coefficient dict");

  m.def("step_ivp", [](const TimeScale& s, const py::object& a, const VectorXd& x0,
                       std::pair<double, double> w, double h, const py::object& f) {
    const Grid g = build_grid(s, window_of(w), h);
    const MatrixFunction am = system(a, g);
    const Trajectory x = step_ivp(am, forcing(f, am.dim), g.front(), x0, g);
    return std::make_pair(g.times(), MatrixXd(x.values));
  }, py::arg("scale"), py::arg("A"), py::arg("x0"), py::arg("window"), py::arg("h") = 0.01,
        py::arg("forcing") = py::none(), "returns (t, X) with X of shape dim x n");

  m.def("green_apply", [](const TimeScale& s, const MatrixXd& a, const py::object& p,
                          std::pair<double, double> w, double h, const py::object& f) {
    const Grid g = build_grid(s, window_of(w), h);
    const ProjectionFamily pf = p.is_none() ? spectral_projections(a, g)
                                            : ProjectionFamily::constant_projection(py::cast<MatrixXd>(p));
    const GreenOperator op(MatrixFunction::constant_matrix(a), pf, s, g);
    const Forcing fr = f.is_none() ? constant_forcing(VectorXd::Ones(a.rows())) : forcing(f, int(a.rows()));
    const GreenResult r = op.apply(fr);
    py::dict d;
    d["t"] = g.times();
    d["x"] = MatrixXd(r.trajectory.values);
    d["tail_bound"] = r.tail_bound;
    d["norm_estimate"] = op.norm_estimate().value;
    d["verify_residual"] = op.verify(fr, 1e-8).residual;
    return d;
  }, py::arg("scale"), py::arg("A"), py::arg("P") = py::none(), py::arg("window") = std::make_pair(0.0, 40.0),
        py::arg("h") = 0.01, py::arg("forcing") = py::none());

  m.def("ts_exponent", [](const TimeScale& s, const std::vector<double>& log_f,
                          std::pair<double, double> w, double h) {
    const Grid g = build_grid(s, window_of(w), h);
    if (log_f.size() != g.size()) fail(ErrorKind::InvalidArgument, "log_f must have one entry per grid point");
    const ExponentEstimate e = ts_exponent(log_f, g, s, g.front());
    return std::make_pair(e.value, e.band);
  }, py::arg("scale"), py::arg("log_f"), py::arg("window"), py::arg("h") = 0.01,
        "(exponent, band) of a log-magnitude profile sampled on the grid of the window");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "runs the chronoscale command line; returns (exit_code, stdout, stderr)");

  m.def("builtins", [] { return cli::list_builtins().dump(); });
}
