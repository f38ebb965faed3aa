// Python bindings. Thin: arrays in and out, errors mapped to one exception
// type carrying the error kind.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fracwave/config.hpp"
#include "fracwave/errors.hpp"
#include "fracwave/linear_solver.hpp"
#include "fracwave/mittag_leffler.hpp"
#include "fracwave/rate_verifier.hpp"
#include "fracwave/semilinear_solver.hpp"
#include "fracwave/spectral_operator.hpp"

namespace py = pybind11;
using namespace fracwave;

namespace {

py::array_t<double> field_array(const Field& f) {
  py::array_t<double> a({f.nodes(), f.modes()});
  std::copy(f.data().begin(), f.data().end(), a.mutable_data());
  return a;
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["t"] = py::array_t<double>(tr.time.nodes.size(), tr.time.nodes.data());
  d["u"] = field_array(tr.u);
  d["du"] = field_array(tr.du);
  d["dalpha"] = field_array(tr.dalpha);
  d["au"] = field_array(tr.au);
  if (tr.d2u) d["d2u"] = field_array(*tr.d2u);
  d["alpha"] = tr.alpha;
  d["metadata"] = tr.metadata;
  return d;
}

// pybind11 holders cannot be shared_ptr<const T>; grids are immutable
// through this interface anyway
using PyGrid = std::shared_ptr<SpectralGrid>;
PyGrid py_grid(const GridPtr& g) { return std::const_pointer_cast<SpectralGrid>(g); }

Nonlinearity nonlinearity(const std::string& kind, double coeff, int p) {
  if (kind == "zero") return Nonlinearity::zero();
  if (kind == "linear") return Nonlinearity::linear(coeff);
  if (kind == "power") return Nonlinearity::power(p, coeff);
  if (kind == "sine") return Nonlinearity::sine();
  throw Error(ErrorKind::Validation, "unknown nonlinearity '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "fractional wave equation solvers";

  // args are (message, kind); kept alive for the life of the interpreter
  static PyObject* error_type =
      PyErr_NewException("fracwave._core.FracwaveError", PyExc_RuntimeError, nullptr);
  m.attr("FracwaveError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::tuple args = py::make_tuple(std::string(e.what()), to_string(e.kind()));
      PyErr_SetObject(error_type, args.ptr());
    }
  });

  m.attr("DEFAULT_ML_TOL") = kDefaultMlTol;

  m.def("ml", py::vectorize([](double alpha, double beta, double z, double tol) {
          return ml({alpha, beta, z}, tol);
        }),
        py::arg("alpha"), py::arg("beta"), py::arg("z"), py::arg("tol") = kDefaultMlTol,
        "E_{alpha,beta}(z) for real z <= 0 (broadcasts over arrays).");
  m.def("ml_regime", [](double alpha, double beta, double z, double tol) {
    const auto r = ml_eval({alpha, beta, z}, tol);
    return py::make_tuple(r.value, std::string(to_string(r.regime)));
  }, py::arg("alpha"), py::arg("beta"), py::arg("z"), py::arg("tol") = kDefaultMlTol);
  m.def("ml_kernel", py::vectorize([](double alpha, double beta, double lam, double t) {
          return ml_kernel(alpha, beta, lam, t);
        }),
        py::arg("alpha"), py::arg("beta"), py::arg("lam"), py::arg("t"),
        "t^{beta-1} E_{alpha,beta}(-lam t^alpha).");

  py::class_<SpectralGrid, PyGrid>(m, "SpectralGrid")
      .def_property_readonly("eigenvalues", &SpectralGrid::eigenvalues)
      .def_property_readonly("weights", [](const SpectralGrid& g) {
        std::vector<double> w;
        for (const auto& md : g.modes()) w.push_back(md.w);
        return w;
      })
      .def_property_readonly("m0", &SpectralGrid::m0)
      .def_property_readonly("label", &SpectralGrid::label)
      .def("__len__", &SpectralGrid::size)
      .def("to_document", [](const SpectralGrid& g) { return spectral_measure_document(g); })
      .def("norm", [](const SpectralGrid& g, const std::vector<double>& v, double gamma) {
        return norm_V(g, v, {gamma});
      }, py::arg("v"), py::arg("gamma"));

  m.def("dirichlet_laplacian",
        [](double length, int modes) { return py_grid(build_dirichlet_laplacian(length, modes)); },
        py::arg("length"), py::arg("modes"));
  m.def("harmonic_oscillator",
        [](int modes) { return py_grid(build_harmonic_oscillator(modes)); }, py::arg("modes"));
  m.def("fractional_power",
        [](const PyGrid& g, double s) { return py_grid(build_fractional_power(*g, s)); },
        py::arg("grid"), py::arg("s"));
  m.def("shift", [](const PyGrid& g, double c) { return py_grid(shift(*g, c)); },
        py::arg("grid"), py::arg("c"));
  m.def("spectral_measure",
        [](const std::string& text) { return py_grid(load_spectral_measure(text)); },
        py::arg("document"));
  m.def("log_spectrum",
        [](double lo, double hi, int per_decade) {
          return py_grid(build_log_spectrum(lo, hi, per_decade));
        },
        py::arg("lam_lo"), py::arg("lam_hi"), py::arg("per_decade"));

  m.def(
      "solve_linear",
      [](const PyGrid& g, double alpha, std::vector<double> u0, std::vector<double> u1,
         double T, int N, double grading, bool d2u) {
        u0.resize(g->size(), 0.0);
        u1.resize(g->size(), 0.0);
        const auto tg = grading == 1.0 ? TimeGrid::uniform(T, N) : TimeGrid::graded(T, N, grading);
        LinearOptions o;
        o.want_d2u = d2u;
        Trajectory tr;
        {
          py::gil_scoped_release nogil;
          tr = solve_linear({g, u0, u1, {}, alpha}, tg, o);
        }
        return trajectory_dict(tr);
      },
      py::arg("grid"), py::arg("alpha"), py::arg("u0"), py::arg("u1"), py::arg("T") = 1.0,
      py::arg("N") = 128, py::arg("grading") = 1.0, py::arg("d2u") = false,
      "Homogeneous linear problem; data shorter than the grid is zero-padded.");

  m.def(
      "solve_semilinear",
      [](const PyGrid& g, double alpha, std::vector<double> u0, std::vector<double> u1,
         const std::string& kind, double coeff, int p, double T, double dt) {
        u0.resize(g->size(), 0.0);
        u1.resize(g->size(), 0.0);
        SemilinearConfig cfg;
        cfg.dt = dt;
        SolveOutcome out;
        {
          py::gil_scoped_release nogil;
          out = solve_semilinear({g, alpha, u0, u1, nonlinearity(kind, coeff, p)}, T, cfg);
        }
        py::dict d = trajectory_dict(out.traj);
        d["status"] = to_string(out.status);
        d["t_reached"] = out.t_reached;
        d["t_max_estimate"] = out.t_max_estimate ? py::cast(*out.t_max_estimate) : py::none();
        std::vector<double> weak;
        for (const auto& e : out.energy) weak.push_back(e.weak);
        d["energy"] = weak;
        d["report"] = outcome_report_json(out);
        return d;
      },
      py::arg("grid"), py::arg("alpha"), py::arg("u0"), py::arg("u1"),
      py::arg("nonlinearity") = "zero", py::arg("coeff") = 1.0, py::arg("p") = 2,
      py::arg("T") = 1.0, py::arg("dt") = 1e-3);

  m.def(
      "fit_power_law",
      [](const std::vector<double>& t, const std::vector<double>& v, double lo, double hi) {
        const auto f = fit_power_law(t, v, {lo, hi});
        py::dict d;
        d["exponent"] = f.exponent;
        d["std_error"] = f.std_error;
        d["r2"] = f.r2;
        d["used"] = f.used;
        d["zeros_excluded"] = f.zeros_excluded;
        return d;
      },
      py::arg("t"), py::arg("v"), py::arg("lo"), py::arg("hi"));

  m.def(
      "rate_suite_json",
      [](double alpha, bool single_mode) {
        py::gil_scoped_release nogil;
        return rate_reports_json(single_mode ? run_single_mode_rates(alpha)
                                             : run_rate_suite(alpha));
      },
      py::arg("alpha"), py::arg("single_mode") = false);

  m.def(
      "resolve_config",
      [](const std::string& text, const std::string& base_dir) {
        return parse_run_config(text, base_dir).resolved;
      },
      py::arg("text"), py::arg("base_dir") = ".",
      "Validates a run configuration and returns it with defaults filled in.");
}
