#include "sdeinfer/experiment.hpp"

#include "sdeinfer/errors.hpp"
#include "sdeinfer/parallel.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace sdeinfer {

namespace {

std::vector<double> to_std(VectorCRef v) { return {v.data(), v.data() + v.size()}; }

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_header(std::ostream& out, const ExperimentConfig& config) {
  out << "# sdeinfer " << kVersion << '\n';
  out << "# config:\n";
  std::istringstream src(config.source_text);
  for (std::string line; std::getline(src, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << "#   " << line << '\n';
  }
  out << "# seed = " << config.seed << '\n';
}

std::string join(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ' ';
    s += io::format_double(values[i]);
  }
  return s;
}

}  // namespace

void require_valid(const ExperimentConfig& config) {
  const ConfigReport report = validate_config(config);
  for (const auto& v : report.violations) {
    if (v.kind == ConfigViolation::Kind::kRegistry) throw RegistryError(v.message);
  }
  if (!report.ok()) throw ConfigError(report.violations.front().message);
}

MomentTable moment_table_for(const ExperimentConfig& config, const ObservationSet& observations,
                             std::span<const Vector> points, std::size_t threads) {
  const ParametrizedModel model = registry::make_basis(config.basis);
  const AdmissibleFunction phi = registry::make_phi(config.phi, model.dim());
  MomentTableOptions opts;
  opts.stride = config.stride;
  opts.bandwidth = config.bandwidth;
  opts.threads = threads;
  return compute_moment_table(observations, model, phi, points, config.t_max, opts);
}

LinearSystemEstimate estimate(const ExperimentConfig& config, const ObservationSet& observations,
                              std::size_t threads) {
  require_valid(config);
  const TrialPoints xi = draw_trial_points(config.m, observed_dim(config), config.seed);
  const MomentTable table = moment_table_for(config, observations, xi.points, threads);
  return estimate(table, config.t_max, config.rank_tol);
}

ExperimentResult run_pipeline(const ExperimentConfig& config, std::size_t threads,
                              ObservationSet* keep_observations) {
  require_valid(config);
  ExperimentResult result;
  result.config = config;
  result.theta_true = resolve_theta_true(config);
  const std::size_t d = observed_dim(config);
  result.trial_points = draw_trial_points(config.m, d, config.seed);

  const SdeSystem system = make_system(config);
  const ParametrizedModel model = registry::make_basis(config.basis);
  const AdmissibleFunction phi = registry::make_phi(config.phi, d);
  MomentTableOptions opts;
  opts.stride = config.stride;
  opts.bandwidth = config.bandwidth;
  opts.threads = threads;
  const auto& points = result.trial_points.points;

  if (config.design == DesignKind::kEnsemble && keep_observations == nullptr) {
    result.table = simulate_moment_table(system, model, phi, points, config.members, config.h,
                                         config.t_max, config.seed, opts);
  } else {
    ObservationDesign design;
    if (config.design == DesignKind::kEnsemble) {
      design = EnsembleDesign{points, config.members,
                              static_cast<std::size_t>(std::llround(config.t_max / config.h)), config.h};
    } else {
      design = SeriesDesign{config.T_total, config.h, config.burn_in, {}};
    }
    ObservationSet obs = generate_observations(system, design, config.seed, threads);
    result.table = compute_moment_table(obs, model, phi, points, config.t_max, opts);
    if (keep_observations) *keep_observations = std::move(obs);
  }

  if (result.theta_true) {
    result.sweep = error_sweep(result.table, *result.theta_true, config.t_grid, config.rank_tol);
  } else {
    for (double t : config.t_grid) {
      SweepPoint p;
      p.t = t;
      p.relative_error = std::numeric_limits<double>::quiet_NaN();
      try {
        p.estimate = estimate(result.table, t, config.rank_tol);
      } catch (const std::exception& e) {
        p.failure = e.what();
      }
      result.sweep.push_back(std::move(p));
    }
  }
  return result;
}

void write_sweep_csv(std::ostream& out, const ExperimentResult& result) {
  const ExperimentConfig& c = result.config;
  write_header(out, c);
  if (result.theta_true) out << "# theta_true = " << join(to_std(*result.theta_true)) << '\n';
  for (std::size_t i = 0; i < result.trial_points.size(); ++i) {
    out << "# trial_point " << i << " = " << join(to_std(result.trial_points.points[i])) << '\n';
  }
  if (result.table.bandwidth) out << "# bandwidth = " << io::format_double(*result.table.bandwidth) << '\n';

  const std::size_t n = result.table.n_params;
  out << "t,rel_error";
  for (std::size_t j = 1; j <= n; ++j) out << ",theta_hat_" << j;
  out << ",residual,eff_rank,cond\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepPoint& p : result.sweep) {
    out << io::format_double(p.t) << ',' << io::format_double(p.relative_error);
    for (std::size_t j = 0; j < n; ++j) {
      out << ',' << io::format_double(p.failure ? nan : p.estimate.theta_hat[static_cast<Eigen::Index>(j)]);
    }
    out << ',' << io::format_double(p.failure ? nan : p.estimate.residual_norm) << ','
        << (p.failure ? 0 : p.estimate.effective_rank) << ','
        << io::format_double(p.failure ? nan : p.estimate.condition) << '\n';
  }
}

void write_diagnostics_json(std::ostream& out, const ExperimentResult& result) {
  using nlohmann::json;
  const ExperimentConfig& c = result.config;
  json j;
  j["version"] = kVersion;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["config"] = c.source_text;
  j["delta"] = c.delta();
  if (result.theta_true) j["theta_true"] = to_std(*result.theta_true);
  json pts = json::array();
  for (const auto& p : result.trial_points.points) pts.push_back(to_std(p));
  j["trial_points"] = pts;
  j["bandwidth"] = result.table.bandwidth ? json(*result.table.bandwidth) : json(nullptr);
  json sweep = json::array();
  for (const SweepPoint& p : result.sweep) {
    json e;
    e["t"] = p.t;
    if (p.failure) {
      e["failure"] = *p.failure;
    } else {
      e["singular_values"] = to_std(p.estimate.singular_values);
      e["effective_rank"] = p.estimate.effective_rank;
      e["residual"] = p.estimate.residual_norm;
      e["condition"] = std::isfinite(p.estimate.condition) ? json(p.estimate.condition) : json(nullptr);
      e["theta_hat"] = to_std(p.estimate.theta_hat);
      if (std::isfinite(p.relative_error)) e["rel_error"] = p.relative_error;
    }
    sweep.push_back(e);
  }
  j["sweep"] = sweep;
  out << j.dump(2) << '\n';
}

void write_moment_dumps(const std::filesystem::path& dir, const MomentTable& table) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < table.n_points(); ++i) {
    std::ofstream out = open_output(dir / ("moments_point_" + std::to_string(i) + ".csv"));
    out << "# xi = " << join(to_std(table.points[i])) << '\n';
    out << "tau,u_phi";
    for (std::size_t j = 1; j <= table.n_params; ++j) out << ",u_L" << j << "phi";
    out << '\n';
    const Matrix& curve = table.curves[i];
    for (Eigen::Index k = 0; k < curve.cols(); ++k) {
      out << io::format_double(table.delta * static_cast<double>(k));
      for (Eigen::Index r = 0; r < curve.rows(); ++r) out << ',' << io::format_double(curve(r, k));
      out << '\n';
    }
  }
}

std::filesystem::path run_experiment(const std::filesystem::path& config_path,
                                     const RunOptions& options) {
  ExperimentConfig config = load_config(config_path);
  if (options.seed) config.seed = *options.seed;
  const std::size_t threads = resolve_threads(options.threads);

  ObservationSet observations;
  ExperimentResult result =
      run_pipeline(config, threads, options.save_observations ? &observations : nullptr);

  std::filesystem::create_directories(options.out_dir);
  const auto csv_path = options.out_dir / (config.name + ".csv");
  {
    std::ofstream out = open_output(csv_path);
    write_sweep_csv(out, result);
  }
  {
    std::ofstream out = open_output(options.out_dir / (config.name + ".json"));
    write_diagnostics_json(out, result);
  }
  if (options.save_observations) {
    std::ofstream out = open_output(*options.save_observations);
    write_observations(out, observations);
  }
  if (options.dump_moments) write_moment_dumps(*options.dump_moments, result.table);
  return csv_path;
}

std::vector<MleDemoRow> mle_demo(const ExperimentConfig& config) {
  if (config.system_type != "langevin1d") throw ConfigError("mle-demo needs system.type = langevin1d");
  if (config.design != DesignKind::kSeries) throw ConfigError("mle-demo needs design.kind = series");
  if (config.mle.v_prime != "x") throw RegistryError("unknown mle.v_prime '" + config.mle.v_prime + "'");
  const auto& p = std::get<Langevin1dParams>(config.system);
  const double A = homogenized_langevin_coefficients(p.alpha, p.sigma, 2.0 * std::numbers::pi,
                                                     [](double y) { return std::cos(y); })
                       .A;
  const SdeSystem system = make_system(config);
  const Trajectory path = simulate_series(system, SeriesDesign{config.T_total, config.h, config.burn_in, {}},
                                          config.seed);
  const auto results = mle_stride_sweep(path, [](double x) { return x; }, config.mle.strides);
  std::vector<MleDemoRow> rows;
  for (const MleResult& r : results) {
    MleDemoRow row;
    row.stride = r.stride;
    row.H = static_cast<double>(r.stride) * config.h;
    row.estimate = r.estimate;
    row.rel_dev_alpha = std::abs(r.estimate - p.alpha) / std::abs(p.alpha);
    row.rel_dev_A = std::abs(r.estimate - A) / A;
    row.high_variance = row.H >= 1.0;
    rows.push_back(row);
  }
  return rows;
}

void write_mle_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<MleDemoRow>& rows) {
  write_header(out, config);
  out << "stride,H,estimate,rel_dev_alpha,rel_dev_A,flag\n";
  for (const MleDemoRow& r : rows) {
    out << r.stride << ',' << io::format_double(r.H) << ',' << io::format_double(r.estimate) << ','
        << io::format_double(r.rel_dev_alpha) << ',' << io::format_double(r.rel_dev_A) << ','
        << (r.high_variance ? "high_variance" : "ok") << '\n';
  }
}

std::filesystem::path run_mle_demo(const std::filesystem::path& config_path, const RunOptions& options) {
  ExperimentConfig config = load_config(config_path);
  if (options.seed) config.seed = *options.seed;
  require_valid(config);
  const auto rows = mle_demo(config);
  std::filesystem::create_directories(options.out_dir);
  const auto path = options.out_dir / (config.name + ".csv");
  std::ofstream out = open_output(path);
  write_mle_csv(out, config, rows);
  return path;
}

ExitCode exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e)) return ExitCode::kConfig;
  if (dynamic_cast<const RegistryError*>(&e)) return ExitCode::kRegistry;
  if (dynamic_cast<const SimulationBlowup*>(&e)) return ExitCode::kBlowup;
  return ExitCode::kRuntime;
}

}  // namespace sdeinfer
