#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "deepritz/checkpoint.hpp"
#include "deepritz/fdm.hpp"
#include "deepritz/problems.hpp"
#include "deepritz/runner.hpp"
#include "deepritz/trialfn.hpp"

namespace py = pybind11;
using namespace deepritz;

namespace {

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["rel_l2"] = r.rel_l2;
  d["max_err"] = r.max_err;
  d["lambda_est"] = r.lambda_est;
  d["lambda_rel_err"] = r.lambda_rel_err;
  return d;
}

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::dict curve_dict(const std::vector<CurveRow>& rows) {
  const auto n = static_cast<py::ssize_t>(rows.size());
  py::array_t<std::int64_t> step(n);
  py::array_t<double> total(n), interior(n), boundary(n), rel(n), lambda(n), dw(n);
  const double nan = std::nan("");
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    step.mutable_at(i) = static_cast<std::int64_t>(r.step);
    total.mutable_at(i) = r.loss_total;
    interior.mutable_at(i) = r.interior_term;
    boundary.mutable_at(i) = r.boundary_term;
    rel.mutable_at(i) = r.rel_l2.value_or(nan);
    lambda.mutable_at(i) = r.lambda_est.value_or(nan);
    dw.mutable_at(i) = r.dw_norm.value_or(nan);
  }
  py::dict d;
  d["step"] = step;
  d["loss_total"] = total;
  d["interior_term"] = interior;
  d["boundary_term"] = boundary;
  d["rel_l2"] = rel;
  d["lambda_est"] = lambda;
  d["dw_norm"] = dw;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NonFiniteLossError>(m, "NonFiniteLossError", PyExc_ArithmeticError);
  py::register_exception<LayoutError>(m, "LayoutError", PyExc_ValueError);
  py::register_exception<CheckpointParseError>(m, "CheckpointParseError", PyExc_ValueError);
  py::register_exception<UnknownProblemError>(m, "UnknownProblemError", PyExc_KeyError);

  py::enum_<InitScheme>(m, "InitScheme")
      .value("uniform", InitScheme::UniformScaled)
      .value("zero", InitScheme::Zero);
  py::enum_<BoundaryWeighting>(m, "BoundaryWeighting")
      .value("plain", BoundaryWeighting::Plain)
      .value("face_measure", BoundaryWeighting::FaceMeasure);
  py::enum_<NormPenalty>(m, "NormPenalty")
      .value("batch", NormPenalty::Batch)
      .value("split", NormPenalty::SplitBatch);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def(py::init([](std::string id) {
             RunConfig c;
             c.problem_id = std::move(id);
             return c;
           }),
           py::arg("problem"))
      .def_readwrite("problem", &RunConfig::problem_id)
      .def_readwrite("iters", &RunConfig::iters)
      .def_readwrite("interior_batch", &RunConfig::interior_batch)
      .def_readwrite("boundary_per_face", &RunConfig::boundary_per_face)
      .def_readwrite("eta", &RunConfig::eta)
      .def_readwrite("decay_every", &RunConfig::decay_every)
      .def_readwrite("decay_rate", &RunConfig::decay_rate)
      .def_readwrite("clip_norm", &RunConfig::clip_norm)
      .def_readwrite("init_gain", &RunConfig::init_gain)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("blocks", &RunConfig::blocks)
      .def_readwrite("width", &RunConfig::width)
      .def_readwrite("widths", &RunConfig::widths)
      .def_readwrite("beta", &RunConfig::beta)
      .def_readwrite("gamma", &RunConfig::gamma)
      .def_readwrite("log_every", &RunConfig::log_every)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("warm_start", &RunConfig::warm_start)
      .def_readwrite("deterministic", &RunConfig::deterministic)
      .def_readwrite("threads", &RunConfig::threads)
      .def_readwrite("track_dw", &RunConfig::track_dw)
      .def_readwrite("evaluate_curve", &RunConfig::evaluate_curve)
      .def_readwrite("init", &RunConfig::init)
      .def_readwrite("weighting", &RunConfig::weighting)
      .def_readwrite("norm_penalty", &RunConfig::norm_penalty);

  m.def("load_config", &load_config_file, py::arg("path"));

  m.def("list_problems", [] {
    py::list out;
    for (const auto& p : catalog()) {
      py::dict d;
      d["id"] = p.id;
      d["summary"] = p.summary;
      d["dim"] = p.domain.dim();
      d["params"] = count_params(p.net);
      d["spectral"] = p.spectral();
      d["exact_eigenvalue"] = p.exact_eigenvalue;
      out.append(d);
    }
    return out;
  });

  m.def(
      "run",
      [](const RunConfig& cfg) {
        std::optional<RunResult> out;
        {
          py::gil_scoped_release release;
          out.emplace(run(cfg));
        }
        const auto& res = *out;
        py::dict d;
        d["problem"] = res.spec.id;
        d["step"] = res.meta.step;
        d["params"] = to_array(res.params.values());
        d["curve"] = curve_dict(res.curve);
        d["report"] = report_dict(res.report);
        return d;
      },
      py::arg("config"));

  m.def(
      "grad_check",
      [](const RunConfig& cfg) {
        const auto r = grad_check(cfg);
        py::dict d;
        d["max_rel_err"] = r.max_rel_err;
        d["worst_tensor"] = r.worst_tensor;
        d["max_abs_grad"] = r.max_abs_grad;
        d["loss"] = r.loss;
        d["fd_floor"] = r.fd_floor;
        d["params"] = r.param_count;
        d["checked"] = r.checked;
        d["passed"] = r.max_rel_err <= kGradCheckTolerance;
        return d;
      },
      py::arg("config"));

  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& path, std::optional<std::string> problem) {
        const auto loaded = read_checkpoint_file(path);
        RunConfig cfg;
        cfg.problem_id = problem.value_or(loaded.meta.problem_id);
        const auto spec = resolve_problem(cfg);
        const TrialFunction net(spec.net);
        if (!(loaded.store.layout() == net.layout())) {
          throw LayoutError("checkpoint layout does not match the network of '" + spec.id + "'");
        }
        return report_dict(evaluate(spec, net, loaded.store));
      },
      py::arg("path"), py::arg("problem") = py::none());

  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        const auto loaded = read_checkpoint_file(path);
        py::dict d;
        d["problem"] = loaded.meta.problem_id;
        d["seed"] = loaded.meta.seed;
        d["step"] = loaded.meta.step;
        d["values"] = to_array(loaded.store.values());
        return d;
      },
      py::arg("path"));

  m.def(
      "exact_solution",
      [](const std::string& problem, py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        if (x.ndim() != 2) throw std::invalid_argument("points must have shape (n, d)");
        const auto n = x.shape(0);
        const auto d = static_cast<std::size_t>(x.shape(1));
        py::array_t<double> out(n);
        for (py::ssize_t i = 0; i < n; ++i) {
          out.mutable_at(i) = exact_solution(problem, std::span<const double>(x.data(i, 0), d));
        }
        return out;
      },
      py::arg("problem"), py::arg("points"));

  m.def(
      "fdm_solve",
      [](std::size_t n, const std::string& problem, const std::string& solver) {
        FdmProblem p;
        if (problem == "slit_poisson") {
          p = FdmProblem::SlitPoissonF1;
        } else if (problem == "slit_harmonic") {
          p = FdmProblem::SlitHarmonicExactBC;
        } else {
          throw std::invalid_argument("fdm problem must be slit_poisson or slit_harmonic");
        }
        if (solver != "cg" && solver != "direct") {
          throw std::invalid_argument("solver must be cg or direct");
        }
        const auto sol =
            fdm_solve(n, p, solver == "cg" ? FdmSolver::ConjugateGradient : FdmSolver::Direct);
        py::array_t<double> u({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(n)});
        std::copy(sol.values.begin(), sol.values.end(), u.mutable_data());
        py::dict d;
        d["u"] = u;  // u[j, i] at (x1_i, x2_j)
        d["residual"] = sol.residual;
        d["iterations"] = sol.iterations;
        if (p == FdmProblem::SlitHarmonicExactBC) {
          d["report"] = report_dict(fdm_error(sol, [](std::span<const double> x) {
            return slit_corner_solution(x[0], x[1]);
          }));
        }
        return d;
      },
      py::arg("n"), py::arg("problem") = "slit_poisson", py::arg("solver") = "cg");

  m.attr("CURVE_HEADER") = kCurveHeader;
}
