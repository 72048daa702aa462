#include "sdeinfer/baselines.hpp"
#include "sdeinfer/config.hpp"
#include "sdeinfer/errors.hpp"
#include "sdeinfer/estimator.hpp"
#include "sdeinfer/experiment.hpp"
#include "sdeinfer/model.hpp"
#include "sdeinfer/moments.hpp"
#include "sdeinfer/rng.hpp"
#include "sdeinfer/simulate.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace sdeinfer;

namespace {

Trajectory to_trajectory(const Matrix& states, double h) {
  Trajectory tr;
  tr.h = h;
  tr.states = states;
  return tr;
}

Matrix points_matrix(const std::vector<Vector>& points) {
  if (points.empty()) return {};
  Matrix out(static_cast<Eigen::Index>(points.size()), points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return out;
}

std::vector<Vector> points_list(const Matrix& m) {
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).transpose());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Parametric inference for SDEs from perturbed, discretely sampled data";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RegistryError>(m, "RegistryError", PyExc_KeyError);
  py::register_exception<SimulationBlowup>(m, "SimulationBlowup", PyExc_ArithmeticError);
  py::register_exception<AssemblyError>(m, "AssemblyError", PyExc_ArithmeticError);
  py::register_exception<DegeneratePathError>(m, "DegeneratePathError", PyExc_ValueError);

  // model
  m.def("basis_names", &registry::basis_names);
  m.def("phi_names", &registry::phi_names);
  m.def(
      "evaluate_drift",
      [](const std::string& basis, const Vector& theta, const Vector& x) {
        return evaluate_drift(registry::make_basis(basis), theta, x);
      },
      py::arg("basis"), py::arg("theta"), py::arg("x"));
  m.def(
      "evaluate_diffusion",
      [](const std::string& basis, const Vector& theta, const Vector& x) {
        return evaluate_diffusion(registry::make_basis(basis), theta, x);
      },
      py::arg("basis"), py::arg("theta"), py::arg("x"));
  m.def(
      "generator_apply",
      [](const std::string& basis, std::size_t j, const std::string& phi, const Vector& x) {
        const ParametrizedModel model = registry::make_basis(basis);
        return generator_apply(model, j, registry::make_phi(phi, model.dim()), x);
      },
      py::arg("basis"), py::arg("j"), py::arg("phi"), py::arg("x"),
      "(L_j phi)(x) for the zero-based basis index j.");

  // simulate
  m.def("bessel_i0", &bessel_i0);
  m.def(
      "sample_ou_exact",
      [](double A, double Sigma, double x0, double t, std::size_t n, std::uint64_t seed) {
        RandomStream rng(seed);
        Vector out(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = sample_ou_exact(A, Sigma, x0, t, rng);
        return out;
      },
      py::arg("A"), py::arg("Sigma"), py::arg("x0"), py::arg("t"), py::arg("n") = 1, py::arg("seed") = 0);
  m.def(
      "homogenized_langevin_coefficients",
      [](double alpha, double sigma, double period, const std::function<double(double)>& p) {
        const auto c = homogenized_langevin_coefficients(alpha, sigma, period, p);
        return py::make_tuple(c.A, c.Sigma);
      },
      py::arg("alpha"), py::arg("sigma"), py::arg("period"), py::arg("p"));
  m.def(
      "homogenized_2d_coefficients",
      [](const Matrix& M, double sigma) {
        const auto c = homogenized_2d_coefficients(M, sigma);
        return py::make_tuple(c.drift, c.diffusion);
      },
      py::arg("M"), py::arg("sigma"), "Returns (-R M, sigma R).");
  m.def(
      "simulate_langevin_1d",
      [](double alpha, double sigma, double epsilon, double T_total, double h, double burn_in,
         std::uint64_t seed) {
        py::gil_scoped_release release;
        return simulate_series(make_langevin_1d_system(alpha, sigma, epsilon),
                               SeriesDesign{T_total, h, burn_in, {}}, seed)
            .states.row(0)
            .transpose()
            .eval();
      },
      py::arg("alpha"), py::arg("sigma"), py::arg("epsilon"), py::arg("T_total"), py::arg("h"),
      py::arg("burn_in") = 10.0, py::arg("seed") = 0);

  // moments
  m.def(
      "trapezoid_integrate",
      [](const std::vector<double>& v, double delta) { return trapezoid_integrate(v, delta); },
      py::arg("values"), py::arg("delta"));
  m.def("default_bandwidth", &default_bandwidth, py::arg("n_samples"), py::arg("dim"), py::arg("scale"));
  m.def(
      "nadaraya_watson_moment",
      [](const Matrix& series, double h, const Vector& xi, std::size_t k, const std::string& phi,
         double bandwidth) {
        return nadaraya_watson_moment(to_trajectory(series, h), xi, k,
                                      registry::make_phi(phi, static_cast<std::size_t>(series.rows())),
                                      bandwidth);
      },
      py::arg("series"), py::arg("h"), py::arg("xi"), py::arg("k"), py::arg("phi"), py::arg("bandwidth"),
      "series is d x L, one column per sample.");

  // estimator
  m.def(
      "draw_trial_points",
      [](std::size_t m_, std::size_t d, std::uint64_t seed) { return points_matrix(draw_trial_points(m_, d, seed).points); },
      py::arg("m"), py::arg("d"), py::arg("seed"), "m x d array of standard-normal trial points.");
  m.def(
      "min_norm_least_squares",
      [](const Matrix& A, const Vector& b, std::optional<double> rank_tol) {
        const LeastSquaresSolution s = min_norm_least_squares(A, b, rank_tol);
        py::dict out;
        out["theta"] = s.theta;
        out["singular_values"] = s.singular_values;
        out["effective_rank"] = s.effective_rank;
        out["residual_norm"] = s.residual_norm;
        out["condition"] = s.condition;
        return out;
      },
      py::arg("A"), py::arg("b"), py::arg("rank_tol") = py::none());
  m.def("relative_error", [](const Vector& a, const Vector& b) { return relative_error(a, b); });

  // baselines
  m.def(
      "mle_langevin",
      [](const Vector& path, double h, std::size_t stride) {
        Trajectory tr;
        tr.h = h;
        tr.states = path.transpose();
        return mle_langevin(tr, [](double x) { return x; }, stride).estimate;
      },
      py::arg("path"), py::arg("h"), py::arg("stride") = 1, "MLE with V'(x) = x on a 1-d path.");

  // configs and experiments
  py::enum_<DesignKind>(m, "DesignKind").value("ensemble", DesignKind::kEnsemble).value("series", DesignKind::kSeries);
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readwrite("name", &ExperimentConfig::name)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("epsilon", &ExperimentConfig::epsilon)
      .def_readwrite("h", &ExperimentConfig::h)
      .def_readwrite("stride", &ExperimentConfig::stride)
      .def_readwrite("members", &ExperimentConfig::members)
      .def_readwrite("m", &ExperimentConfig::m)
      .def_readwrite("t_max", &ExperimentConfig::t_max)
      .def_readwrite("T_total", &ExperimentConfig::T_total)
      .def_readwrite("t_grid", &ExperimentConfig::t_grid)
      .def_readwrite("phi", &ExperimentConfig::phi)
      .def_readwrite("basis", &ExperimentConfig::basis)
      .def_readonly("system_type", &ExperimentConfig::system_type)
      .def_readonly("design", &ExperimentConfig::design)
      .def_property_readonly("delta", &ExperimentConfig::delta)
      .def_property_readonly("theta_true", [](const ExperimentConfig& c) { return resolve_theta_true(c); });
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def(
      "validate_config",
      [](const ExperimentConfig& c) {
        const ConfigReport r = validate_config(c);
        std::vector<std::string> violations;
        for (const auto& v : r.violations) violations.push_back(v.message);
        py::dict out;
        out["resolved"] = r.resolved;
        out["derived"] = r.derived;
        out["violations"] = violations;
        return out;
      },
      py::arg("config"));
  m.def(
      "run",
      [](const ExperimentConfig& c, std::size_t threads) {
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(c, threads);
        }
        py::list sweep;
        for (const SweepPoint& p : r.sweep) {
          py::dict row;
          row["t"] = p.t;
          row["rel_error"] = p.relative_error;
          row["failure"] = p.failure;
          if (!p.failure) {
            row["theta_hat"] = p.estimate.theta_hat;
            row["singular_values"] = p.estimate.singular_values;
            row["effective_rank"] = p.estimate.effective_rank;
            row["residual_norm"] = p.estimate.residual_norm;
            row["condition"] = p.estimate.condition;
          }
          sweep.append(row);
        }
        py::dict out;
        out["trial_points"] = points_matrix(r.trial_points.points);
        out["theta_true"] = r.theta_true;
        out["bandwidth"] = r.table.bandwidth;
        out["sweep"] = sweep;
        return out;
      },
      py::arg("config"), py::arg("threads") = 1,
      "Simulate, estimate and sweep t. Returns trial points, theta_true and one dict per t.");
  m.def(
      "run_experiment",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir,
         std::optional<std::uint64_t> seed, std::size_t threads) {
        RunOptions opts;
        opts.out_dir = out_dir;
        opts.seed = seed;
        opts.threads = threads;
        py::gil_scoped_release release;
        return run_experiment(config, opts);
      },
      py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none(), py::arg("threads") = 1);
}
