#pragma once

// Estimators of conditional expectations E[phi(X_xi(tau))] from discretely
// sampled data, and the trapezoid rule used to integrate moment curves.

#include "sdeinfer/model.hpp"
#include "sdeinfer/simulate.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sdeinfer {

struct MomentCurve {
  Vector xi;
  double delta = 0.0;          // node spacing l h
  std::vector<double> values;  // values[k] ~ E f(X_xi(k delta))
};

/// (1/N) sum_j f(X^(j)(k h)), summed in member order.
double ensemble_moment(std::span<const Trajectory> members, std::size_t tau_index,
                       const ScalarField& f);
double ensemble_moment(std::span<const Trajectory> members, std::size_t tau_index,
                       const AdmissibleFunction& phi);

/// Gaussian kernel K(u) = (2 pi)^{-d/2} exp(-|u|^2 / 2).
double gaussian_kernel(VectorCRef u);

/// Kernel denominators below this are treated as zero.
inline constexpr double kZeroDenominator = 1e-300;

/// Nadaraya-Watson weights w_j(xi) over the usable window j < length - k.
/// Uniform weights when the kernel mass vanishes.
std::vector<double> nadaraya_watson_weights(const Trajectory& series, VectorCRef xi,
                                            std::size_t tau_index, double bandwidth);

/// sum_j w_j(xi) f(series[j + k]) over j < length - k.
double nadaraya_watson_moment(const Trajectory& series, VectorCRef xi, std::size_t tau_index,
                              const ScalarField& f, double bandwidth);
double nadaraya_watson_moment(const Trajectory& series, VectorCRef xi, std::size_t tau_index,
                              const AdmissibleFunction& phi, double bandwidth);

/// kappa = (geometric mean of scale) * N^{-1/(d+4)}.
double default_bandwidth(std::size_t n_samples, std::size_t dim, std::span<const double> scale);

/// Per-coordinate sample standard deviation of a series.
std::vector<double> coordinate_std(const Trajectory& series);

/// (delta/2) (v_0 + v_n + 2 sum_{0<k<n} v_k).
double trapezoid_integrate(std::span<const double> values, double delta);

/// Moment curve of f at xi sampled every `stride` grid steps up to horizon t.
/// Ensemble data must contain xi as one of its start points.
MomentCurve moment_curve(const ObservationSet& obs, VectorCRef xi, const ScalarField& f,
                         double t, std::size_t stride,
                         std::optional<double> bandwidth = std::nullopt);

/// Cached moment curves of phi and every L_j phi at every trial point. All
/// columns of the estimating-equation matrix reuse the same data.
struct MomentTable {
  std::vector<Vector> points;
  double delta = 0.0;
  std::size_t n_params = 0;
  std::vector<Matrix> curves;          // [point](r, k): r = 0 -> phi, r = j + 1 -> L_j phi
  std::vector<double> phi_at_points;   // phi(xi_i) exactly
  std::optional<double> bandwidth;     // set for kernel estimates

  std::size_t n_points() const noexcept { return points.size(); }
  std::size_t n_nodes() const noexcept {
    return curves.empty() ? 0 : static_cast<std::size_t>(curves.front().cols());
  }
  double horizon() const noexcept { return delta * static_cast<double>(n_nodes() - 1); }
};

struct MomentTableOptions {
  std::size_t stride = 1;                 // l, delta = l h
  std::optional<double> bandwidth;        // kernel estimator only; default plug-in
  std::size_t threads = 1;
  /// Kernel terms below this fraction of the largest kernel value at a trial
  /// point are dropped from the batched estimator. 0 keeps every term.
  double kernel_cutoff = 1e-20;
};

/// Curves for horizon t (t = n_delta * delta) from stored observations.
MomentTable compute_moment_table(const ObservationSet& obs, const ParametrizedModel& model,
                                 const AdmissibleFunction& phi, std::span<const Vector> points,
                                 double t, const MomentTableOptions& options = {});

/// Ensemble curves computed member by member straight from the simulator, so
/// no trajectories are kept. Bit-identical to generating the ObservationSet
/// with the same seed and calling compute_moment_table.
MomentTable simulate_moment_table(const SdeSystem& system, const ParametrizedModel& model,
                                  const AdmissibleFunction& phi, std::span<const Vector> points,
                                  std::size_t members, double h, double t, std::uint64_t seed,
                                  const MomentTableOptions& options = {});

/// Lag-k sample autocorrelation of the first coordinate, k = 0..max_lag.
std::vector<double> autocorrelation(const Trajectory& series, std::size_t max_lag,
                                    std::size_t lag_step = 1);

/// Exponential decay rate fitted to positive autocorrelations (least squares
/// on log rho(k) = -rate * k * lag_step * h). Mixing diagnostic only.
double autocorrelation_decay_rate(const Trajectory& series, std::size_t max_lag,
                                  std::size_t lag_step = 1);

/// Integer n with t = n * delta, or ArgumentError when t is not a multiple.
std::size_t steps_for(double t, double delta, const char* what);

}  // namespace sdeinfer
