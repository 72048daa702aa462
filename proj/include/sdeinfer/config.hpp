#pragma once

// Experiment configuration files.
//
// INI syntax: `key = value` lines, `[section]` headers, full-line or trailing
// comments starting with `#` or `;`. Values may be quoted. Lists are comma
// separated; a list may also be written as a range `start:step:stop`
// (inclusive of stop up to rounding).
//
//   name = fig1a                 result file stem
//   seed = 20140601              unsigned 64-bit
//   epsilon = 0.1
//   h = 0.001                    sampling / integration step
//   stride = 1                   quadrature spacing delta = stride * h
//   phi = gauss                  registry name (see model.hpp)
//   basis = ou2                  registry name
//   theta_true = auto            `auto` (homogenized limit), a list, or `none`
//   rank_tol = auto              relative SVD cut-off
//
//   [system]
//   type = fast_ou               A, B, sigma_a (alias varsigma), sigma_b
//   type = langevin2d            M = m11, m12, m21, m22 ; sigma
//   type = langevin1d            alpha ; sigma
//
//   [design]
//   kind = ensemble              N (members), m (trial points), t_max
//   kind = series                T_total, burn_in (default 10), m, t_max
//   bandwidth = auto             series only; kernel bandwidth override
//
//   [sweep]
//   t_grid = 0.01:0.01:0.5
//
//   [mle]                        used by `mle-demo`
//   v_prime = x                  V'(x); only the quadratic potential is built in
//   strides = 1, 10, 100

#include "sdeinfer/simulate.hpp"
#include "sdeinfer/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sdeinfer {

struct Langevin2dParams {
  Matrix M;
  double sigma = 1.0;
};

struct Langevin1dParams {
  double alpha = 1.0;
  double sigma = 1.0;
};

using SystemParams = std::variant<FastOuParams, Langevin2dParams, Langevin1dParams>;

enum class DesignKind { kEnsemble, kSeries };

enum class ThetaSource { kAuto, kExplicit, kNone };

struct MleSettings {
  std::string v_prime = "x";
  std::vector<std::size_t> strides{1};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string system_type;
  SystemParams system;
  double epsilon = 0.1;
  double h = 1e-3;
  std::size_t stride = 1;

  DesignKind design = DesignKind::kEnsemble;
  std::size_t members = 0;  // N, ensemble
  std::size_t m = 0;        // trial points
  double t_max = 0.0;
  double T_total = 0.0;     // series
  double burn_in = 10.0;    // series
  std::optional<double> bandwidth;

  std::string phi;
  std::string basis;
  std::vector<double> t_grid;
  ThetaSource theta_source = ThetaSource::kAuto;
  Vector theta_true;  // for kExplicit
  std::optional<double> rank_tol;
  MleSettings mle;

  std::string source_text;  // verbatim file contents, echoed into results

  double delta() const noexcept { return static_cast<double>(stride) * h; }
};

/// Parses INI text. Syntax errors and missing or malformed keys throw
/// ConfigError. Registry names are not resolved here.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parses "a, b, c" or "start:step:stop".
std::vector<double> parse_number_list(const std::string& text);

struct ConfigViolation {
  enum class Kind { kInvalid, kRegistry } kind;
  std::string message;
};

struct ConfigReport {
  std::vector<std::string> resolved;  // "basis = ou2 (d = 1, n = 2)" style lines
  std::vector<std::string> derived;   // n_t, n_delta, usable window, ...
  std::vector<ConfigViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Resolves registry entries and checks every invariant without simulating.
ConfigReport validate_config(const ExperimentConfig& config);

/// System instance described by the config.
SdeSystem make_system(const ExperimentConfig& config);

/// Observed-state dimension of the configured system.
std::size_t observed_dim(const ExperimentConfig& config);

/// theta_true per the config: explicit list, the homogenized coefficients of
/// the system expressed in the configured basis, or nothing.
std::optional<Vector> resolve_theta_true(const ExperimentConfig& config);

}  // namespace sdeinfer
