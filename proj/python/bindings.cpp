#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlfp/coefficients.hpp"
#include "nlfp/error.hpp"
#include "nlfp/fpke.hpp"
#include "nlfp/grid.hpp"
#include "nlfp/particles.hpp"
#include "nlfp/scenario.hpp"
#include "nlfp/verify.hpp"

namespace py = pybind11;
using namespace nlfp;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

py::array_t<double> frames_array(const DensityTrajectory& t) {
  const auto rows = static_cast<py::ssize_t>(t.frames.size());
  const auto cols = static_cast<py::ssize_t>(t.mesh.n_cells());
  py::array_t<double> a({rows, cols});
  auto m = a.mutable_unchecked<2>();
  for (py::ssize_t k = 0; k < rows; ++k)
    for (py::ssize_t i = 0; i < cols; ++i) m(k, i) = t.frames[static_cast<std::size_t>(k)][static_cast<int>(i)];
  return a;
}

DensityTrajectory trajectory_from(const Mesh& mesh, const std::vector<double>& times,
                                  const py::array_t<double, py::array::c_style | py::array::forcecast>& frames) {
  if (frames.ndim() != 2 || frames.shape(0) != static_cast<py::ssize_t>(times.size()) ||
      frames.shape(1) != mesh.n_cells())
    throw py::value_error("frames must have shape (len(times), n_cells)");
  std::vector<GridFunction> f;
  auto r = frames.unchecked<2>();
  for (py::ssize_t k = 0; k < frames.shape(0); ++k) {
    std::vector<double> v(static_cast<std::size_t>(mesh.n_cells()));
    for (py::ssize_t i = 0; i < frames.shape(1); ++i) v[static_cast<std::size_t>(i)] = r(k, i);
    f.push_back(GridFunction::density(mesh, std::move(v)));
  }
  return DensityTrajectory(mesh, times, std::move(f));
}

}  // namespace

PYBIND11_MODULE(_nlfp, m) {
  m.doc() = "Nonlinear Fokker-Planck solver, McKean-Vlasov particles and verification experiments.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto domain = py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DomainTooSmallError>(m, "DomainTooSmallError", domain.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());

  py::class_<Mesh>(m, "Mesh")
      .def(py::init<double, double, int>(), py::arg("x_min"), py::arg("x_max"), py::arg("n_cells"))
      .def_property_readonly("x_min", &Mesh::x_min)
      .def_property_readonly("x_max", &Mesh::x_max)
      .def_property_readonly("n_cells", &Mesh::n_cells)
      .def_property_readonly("dx", &Mesh::dx)
      .def("centers", [](const Mesh& mesh) { return to_array(mesh.centers()); })
      .def("__repr__", [](const Mesh& mesh) {
        return "Mesh(" + std::to_string(mesh.x_min()) + ", " + std::to_string(mesh.x_max()) + ", " +
               std::to_string(mesh.n_cells()) + ")";
      });

  py::class_<CoefficientSet>(m, "CoefficientSet")
      .def_readonly("name", &CoefficientSet::name)
      .def_property_readonly("gamma0", [](const CoefficientSet& c) { return c.beta.gamma0; })
      .def("beta", [](const CoefficientSet& c, double r) { return c.beta.eval(r); })
      .def("a", [](const CoefficientSet& c, double r) { return eval_a(c, r); })
      .def("b", [](const CoefficientSet& c, double r) { return c.b.eval(r); })
      .def("E", [](const CoefficientSet& c, double x) { return c.E.eval(x); });

  m.def("presets", &preset_names);
  m.def("preset", &preset, py::arg("name"));

  m.def(
      "validate_conditions",
      [](const CoefficientSet& c, double lo, double hi, std::size_t n, std::uint64_t seed) {
        const ValidationReport r = validate_conditions(c, {lo, hi}, n, seed);
        py::dict out;
        for (const auto& cond : r.conditions)
          out[py::str(cond.id)] = py::dict(py::arg("passed") = cond.passed, py::arg("margin") = cond.margin,
                                           py::arg("observed") = cond.observed,
                                           py::arg("witness") = cond.witness);
        return out;
      },
      py::arg("coefficients"), py::arg("lo") = -5.0, py::arg("hi") = 5.0, py::arg("n_samples") = 2000,
      py::arg("seed") = 1);

  m.def(
      "project_gaussian",
      [](const Mesh& mesh, double mean, double sd) {
        return to_array(project_density([=](double x) { return gaussian_pdf(x, mean, sd); }, mesh).values());
      },
      py::arg("mesh"), py::arg("mean") = 0.0, py::arg("sd") = 0.5);

  m.def(
      "solve",
      [](const CoefficientSet& c, const Mesh& mesh, py::array_t<double, py::array::c_style | py::array::forcecast> u0,
         double dt, double T, std::vector<double> checkpoint_times, const std::string& transport) {
        SolverConfig cfg;
        cfg.dt = dt;
        cfg.T = T;
        cfg.checkpoint_times = checkpoint_times.empty() ? std::vector<double>{0.0, T} : checkpoint_times;
        if (transport != "muscl" && transport != "upwind")
          throw py::value_error("transport must be 'muscl' or 'upwind'");
        cfg.transport = transport == "upwind" ? TransportScheme::kUpwind : TransportScheme::kMuscl;
        const Solution s = [&] {
          py::gil_scoped_release release;
          return solve(GridFunction::density(mesh, to_vector(u0)), c, cfg);
        }();
        py::dict out;
        out["times"] = s.trajectory.times;
        out["frames"] = frames_array(s.trajectory);
        out["max_mass_drift"] = s.max_mass_drift();
        out["min_value"] = s.min_value();
        out["gradient_energy"] = s.gradient_energy;
        return out;
      },
      py::arg("coefficients"), py::arg("mesh"), py::arg("u0"), py::arg("dt"), py::arg("T"),
      py::arg("checkpoint_times") = std::vector<double>{}, py::arg("transport") = "muscl");

  m.def(
      "weak_form_residual",
      [](const CoefficientSet& c, const Mesh& mesh, const std::vector<double>& times,
         py::array_t<double, py::array::c_style | py::array::forcecast> frames, double center, double radius,
         double t) {
        return weak_form_residual(trajectory_from(mesh, times, frames), WeakFormTestFunction(center, radius), c, t);
      },
      py::arg("coefficients"), py::arg("mesh"), py::arg("times"), py::arg("frames"), py::arg("center"),
      py::arg("radius"), py::arg("t"));

  m.def(
      "simulate_decoupled",
      [](const CoefficientSet& c, const Mesh& mesh, const std::vector<double>& times,
         py::array_t<double, py::array::c_style | py::array::forcecast> frames, std::size_t n, double dt,
         std::uint64_t seed) {
        const DensityTrajectory traj = trajectory_from(mesh, times, frames);
        const ParticleEnsemble e0 = sample_initial(traj.frames[0], n, seed);
        const BrownianDriver d(n, dt, static_cast<int>(std::llround(traj.final_time() / dt)), seed);
        const EnsembleCheckpoints cps = [&] {
          py::gil_scoped_release release;
          return simulate_decoupled(e0, traj, c, d);
        }();
        py::array_t<double> out({static_cast<py::ssize_t>(cps.size()), static_cast<py::ssize_t>(n)});
        auto w = out.mutable_unchecked<2>();
        for (std::size_t k = 0; k < cps.size(); ++k)
          for (std::size_t i = 0; i < n; ++i)
            w(static_cast<py::ssize_t>(k), static_cast<py::ssize_t>(i)) = cps[k].positions()[i];
        return out;
      },
      py::arg("coefficients"), py::arg("mesh"), py::arg("times"), py::arg("frames"), py::arg("n"),
      py::arg("dt"), py::arg("seed"));

  m.def(
      "kde_density",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x, const Mesh& mesh,
         std::optional<double> bandwidth) {
        const ParticleEnsemble e(to_vector(x), 0.0, 0, ParticleMode::kDecoupled);
        return to_array(kde_density(e, mesh, KdeConfig{bandwidth}).values());
      },
      py::arg("positions"), py::arg("mesh"), py::arg("bandwidth") = py::none());

  m.def(
      "maximal_function",
      [](const Mesh& mesh, py::array_t<double, py::array::c_style | py::array::forcecast> g, double R_max) {
        return to_array(maximal_function(GridFunction(mesh, to_vector(g)), R_max).values());
      },
      py::arg("mesh"), py::arg("g"), py::arg("R_max"));

  m.def(
      "coupling_experiment",
      [](const CoefficientSet& c, const Mesh& mesh, const std::vector<double>& times,
         py::array_t<double, py::array::c_style | py::array::forcecast> frames, std::uint64_t seed, std::size_t n,
         const std::vector<double>& dt_levels) {
        const DensityTrajectory traj = trajectory_from(mesh, times, frames);
        const CouplingReport r = coupling_experiment(c, traj, traj.frames[0], seed, n, dt_levels);
        py::dict out;
        out["sup_path_distance"] = r.sup_path_distance;
        out["distances_by_level"] = r.distances_by_level;
        out["strictly_decreasing"] = r.strictly_decreasing;
        return out;
      },
      py::arg("coefficients"), py::arg("mesh"), py::arg("times"), py::arg("frames"), py::arg("seed"),
      py::arg("n"), py::arg("dt_levels"));

  m.def(
      "lipschitz_certificate",
      [](const CoefficientSet& c, const Mesh& mesh, const std::vector<double>& times,
         py::array_t<double, py::array::c_style | py::array::forcecast> frames, double R, std::size_t n_pairs,
         std::uint64_t seed) {
        const LipschitzCertificate r =
            lipschitz_certificate(trajectory_from(mesh, times, frames), c, R, {}, n_pairs, seed);
        py::dict out;
        out["calibrated_C"] = r.calibrated_C;
        out["one_sided_C"] = r.one_sided_C;
        out["violation_rate"] = r.violation_rate;
        out["f_R_sup"] = r.f_R_sup;
        return out;
      },
      py::arg("coefficients"), py::arg("mesh"), py::arg("times"), py::arg("frames"), py::arg("R") = 3.0,
      py::arg("n_pairs") = 10000, py::arg("seed") = 11);

  m.def(
      "parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("text"), "Validate a scenario document and return it with defaults filled in.");

  m.def(
      "run_config",
      [](const std::string& path, std::optional<std::string> output_dir, int jobs) {
        const ScenarioConfig cfg = load_config(path);
        RunOptions opts;
        opts.output_dir = std::move(output_dir);
        opts.jobs = jobs;
        RunSummary s;
        int code;
        {
          py::gil_scoped_release release;
          code = run_and_report(cfg, opts, &s);
        }
        return py::make_tuple(code, format_summary(s));
      },
      py::arg("path"), py::arg("output_dir") = py::none(), py::arg("jobs") = 1,
      "Run a scenario file; returns (exit_code, summary_text).");
}
