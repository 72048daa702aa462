#pragma once

// Config-driven pipelines behind the command-line tool:
// simulate -> moment table -> estimate -> sweep, and the MLE stride sweep.

#include "sdeinfer/baselines.hpp"
#include "sdeinfer/config.hpp"
#include "sdeinfer/estimator.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sdeinfer {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ExitCode : int {
  kOk = 0,
  kRuntime = 1,
  kConfig = 2,
  kRegistry = 3,
  kBlowup = 4,
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::size_t threads = 1;  // 0 = hardware concurrency
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> save_observations;
  std::optional<std::filesystem::path> dump_moments;  // directory
};

/// Throws ConfigError / RegistryError for the first violation, if any.
void require_valid(const ExperimentConfig& config);

/// Moment table for the configured design from stored observations.
MomentTable moment_table_for(const ExperimentConfig& config, const ObservationSet& observations,
                             std::span<const Vector> points, std::size_t threads = 1);

/// assemble_system -> min_norm_least_squares at t_max on given observations,
/// with the config's trial points, phi and basis.
LinearSystemEstimate estimate(const ExperimentConfig& config, const ObservationSet& observations,
                              std::size_t threads = 1);

struct ExperimentResult {
  ExperimentConfig config;
  TrialPoints trial_points;
  std::optional<Vector> theta_true;
  MomentTable table;
  std::vector<SweepPoint> sweep;
};

/// Full pipeline in memory. Observations are generated from the config seed;
/// ensembles are streamed unless `keep_observations` is set.
ExperimentResult run_pipeline(const ExperimentConfig& config, std::size_t threads = 1,
                              ObservationSet* keep_observations = nullptr);

/// Results CSV: `#` header lines (version, config echo, trial points), then
///   t,rel_error,theta_hat_1..n,residual,eff_rank,cond
void write_sweep_csv(std::ostream& out, const ExperimentResult& result);
/// JSON sidecar with singular values per t, seeds, trial points, config echo.
void write_diagnostics_json(std::ostream& out, const ExperimentResult& result);
/// One file per trial point: moments_point_<i>.csv with tau,u_phi,u_L1phi,...
void write_moment_dumps(const std::filesystem::path& dir, const MomentTable& table);

/// Writes <out>/<name>.csv and <out>/<name>.json (plus optional dumps).
/// Returns the written CSV path.
std::filesystem::path run_experiment(const std::filesystem::path& config_path,
                                     const RunOptions& options);

struct MleDemoRow {
  std::size_t stride = 1;
  double H = 0.0;
  double estimate = 0.0;
  double rel_dev_alpha = 0.0;
  double rel_dev_A = 0.0;
  bool high_variance = false;  // H >= 1: few effective increments
};

/// Simulates the configured 1-d Langevin series and sweeps mle.strides.
std::vector<MleDemoRow> mle_demo(const ExperimentConfig& config);

/// stride,H,estimate,rel_dev_alpha,rel_dev_A,flag
void write_mle_csv(std::ostream& out, const ExperimentConfig& config,
                   const std::vector<MleDemoRow>& rows);

std::filesystem::path run_mle_demo(const std::filesystem::path& config_path,
                                   const RunOptions& options);

/// Maps an in-flight exception to the documented exit code.
ExitCode exit_code_for(const std::exception& e) noexcept;

}  // namespace sdeinfer
