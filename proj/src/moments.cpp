#include "sdeinfer/moments.hpp"

#include "sdeinfer/errors.hpp"
#include "sdeinfer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sdeinfer {

std::size_t steps_for(double t, double delta, const char* what) {
  if (!(delta > 0.0)) throw ArgumentError(std::string(what) + ": spacing must be positive");
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError(std::string(what) + ": t must be positive");
  const double ratio = t / delta;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw ArgumentError(std::string(what) + ": t = " + std::to_string(t) +
                        " is not a positive multiple of " + std::to_string(delta));
  }
  return static_cast<std::size_t>(n);
}

double ensemble_moment(std::span<const Trajectory> members, std::size_t tau_index,
                       const ScalarField& f) {
  if (members.empty()) throw ArgumentError("ensemble_moment: empty ensemble");
  double sum = 0.0;
  for (const Trajectory& tr : members) {
    if (tau_index >= tr.length()) throw ArgumentError("ensemble_moment: time index out of range");
    sum += f(tr.state(tau_index));
  }
  return sum / static_cast<double>(members.size());
}

double ensemble_moment(std::span<const Trajectory> members, std::size_t tau_index,
                       const AdmissibleFunction& phi) {
  return ensemble_moment(members, tau_index, [&phi](VectorCRef x) { return phi.value(x); });
}

double gaussian_kernel(VectorCRef u) {
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(u.size()));
  return norm * std::exp(-0.5 * u.squaredNorm());
}

namespace {

void check_nw_args(const Trajectory& series, VectorCRef xi, std::size_t k, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ArgumentError("nadaraya_watson: bandwidth must be positive");
  if (series.length() < k + 2) {
    throw ArgumentError("nadaraya_watson: series shorter than lag + 2");
  }
  if (xi.size() != series.states.rows()) throw ArgumentError("nadaraya_watson: xi dimension mismatch");
}

}  // namespace

std::vector<double> nadaraya_watson_weights(const Trajectory& series, VectorCRef xi,
                                            std::size_t tau_index, double bandwidth) {
  check_nw_args(series, xi, tau_index, bandwidth);
  const std::size_t usable = series.length() - tau_index;
  std::vector<double> w(usable);
  double denom = 0.0;
  for (std::size_t j = 0; j < usable; ++j) {
    w[j] = gaussian_kernel((series.state(j) - xi) / bandwidth);
    denom += w[j];
  }
  if (denom < kZeroDenominator) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(usable));
  } else {
    for (double& v : w) v /= denom;
  }
  return w;
}

double nadaraya_watson_moment(const Trajectory& series, VectorCRef xi, std::size_t tau_index,
                              const ScalarField& f, double bandwidth) {
  const std::vector<double> w = nadaraya_watson_weights(series, xi, tau_index, bandwidth);
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) sum += w[j] * f(series.state(j + tau_index));
  return sum;
}

double nadaraya_watson_moment(const Trajectory& series, VectorCRef xi, std::size_t tau_index,
                              const AdmissibleFunction& phi, double bandwidth) {
  return nadaraya_watson_moment(
      series, xi, tau_index, [&phi](VectorCRef x) { return phi.value(x); }, bandwidth);
}

double default_bandwidth(std::size_t n_samples, std::size_t dim, std::span<const double> scale) {
  if (n_samples < 2) throw ArgumentError("default_bandwidth: need at least 2 samples");
  if (dim == 0 || scale.size() != dim) throw ArgumentError("default_bandwidth: scale per coordinate");
  double log_mean = 0.0;
  for (double s : scale) {
    if (!(s > 0.0)) throw ArgumentError("default_bandwidth: scales must be positive");
    log_mean += std::log(s);
  }
  const double factor = std::exp(log_mean / static_cast<double>(dim));
  return factor * std::pow(static_cast<double>(n_samples), -1.0 / (static_cast<double>(dim) + 4.0));
}

std::vector<double> coordinate_std(const Trajectory& series) {
  const Eigen::Index n = series.states.cols();
  if (n < 2) throw ArgumentError("coordinate_std: need at least 2 samples");
  std::vector<double> out;
  for (Eigen::Index c = 0; c < series.states.rows(); ++c) {
    const auto row = series.states.row(c);
    const double mean = row.mean();
    out.push_back(std::sqrt((row.array() - mean).square().sum() / static_cast<double>(n - 1)));
  }
  return out;
}

double trapezoid_integrate(std::span<const double> values, double delta) {
  if (values.size() < 2) throw ArgumentError("trapezoid_integrate: need at least 2 values");
  if (!(delta > 0.0)) throw ArgumentError("trapezoid_integrate: delta must be positive");
  double interior = 0.0;
  for (std::size_t k = 1; k + 1 < values.size(); ++k) interior += values[k];
  return 0.5 * delta * (values.front() + values.back() + 2.0 * interior);
}

MomentCurve moment_curve(const ObservationSet& obs, VectorCRef xi, const ScalarField& f,
                         double t, std::size_t stride, std::optional<double> bandwidth) {
  if (stride == 0) throw ArgumentError("moment_curve: stride must be >= 1");
  const double delta = static_cast<double>(stride) * obs.h;
  const std::size_t n_delta = steps_for(t, delta, "moment_curve");
  MomentCurve curve{xi, delta, std::vector<double>(n_delta + 1)};

  if (obs.kind == ObservationKind::kEnsemble) {
    const auto it = std::find_if(obs.points.begin(), obs.points.end(),
                                 [&](const Vector& p) { return p.size() == xi.size() && p == xi; });
    if (it == obs.points.end()) throw ArgumentError("moment_curve: xi is not an ensemble start point");
    const auto& members = obs.ensemble[static_cast<std::size_t>(it - obs.points.begin())];
    for (std::size_t q = 0; q <= n_delta; ++q) curve.values[q] = ensemble_moment(members, q * stride, f);
    return curve;
  }

  const std::size_t max_lag = n_delta * stride;
  if (obs.series.length() < max_lag + 2) throw ArgumentError("moment_curve: series too short for t");
  const double kappa = bandwidth.value_or(default_bandwidth(
      obs.series.length() - max_lag, obs.series.dim(), coordinate_std(obs.series)));
  for (std::size_t q = 0; q <= n_delta; ++q) {
    curve.values[q] = nadaraya_watson_moment(obs.series, xi, q * stride, f, kappa);
  }
  return curve;
}

namespace {

MomentTable empty_table(const ParametrizedModel& model, const AdmissibleFunction& phi,
                        std::span<const Vector> points, double delta, std::size_t n_delta) {
  if (points.empty()) throw ArgumentError("moment table needs at least one trial point");
  if (phi.dim() != model.dim()) throw ArgumentError("phi and model dimensions differ");
  MomentTable table;
  table.points.assign(points.begin(), points.end());
  table.delta = delta;
  table.n_params = model.n_params();
  const auto rows = static_cast<Eigen::Index>(model.n_params() + 1);
  table.curves.assign(points.size(), Matrix::Zero(rows, static_cast<Eigen::Index>(n_delta + 1)));
  for (const Vector& p : points) {
    if (p.size() != static_cast<Eigen::Index>(model.dim())) {
      throw ArgumentError("trial point dimension does not match the model");
    }
    table.phi_at_points.push_back(phi.value(p));
  }
  return table;
}

// Adds the generator rows of one member into curve(r, q), nodes every `stride` states.
void accumulate_member(const ParametrizedModel& model, const AdmissibleFunction& phi,
                       const Trajectory& tr, std::size_t stride, GeneratorWorkspace& ws,
                       std::vector<double>& row, Matrix& curve) {
  const Eigen::Index nodes = curve.cols();
  if (tr.length() < static_cast<std::size_t>((nodes - 1)) * stride + 1) {
    throw ArgumentError("trajectory shorter than the requested horizon");
  }
  for (Eigen::Index q = 0; q < nodes; ++q) {
    generator_row(model, phi, tr.state(static_cast<std::size_t>(q) * stride), ws, row);
    for (Eigen::Index r = 0; r < curve.rows(); ++r) curve(r, q) += row[static_cast<std::size_t>(r)];
  }
}

void kernel_curves(const Trajectory& series, const std::vector<double>& values, std::size_t n_rows,
                   VectorCRef xi, double kappa, std::size_t stride, double cutoff, Matrix& curve) {
  const std::size_t length = series.length();
  const auto nodes = static_cast<std::size_t>(curve.cols());
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(xi.size()));

  std::vector<double> kernel(length);
  double kmax = 0.0;
  for (std::size_t j = 0; j < length; ++j) {
    kernel[j] = norm * std::exp(-0.5 * ((series.state(j) - xi) / kappa).squaredNorm());
    kmax = std::max(kmax, kernel[j]);
  }
  const double threshold = cutoff * kmax;

  std::vector<double> acc(n_rows * nodes, 0.0);
  // denom[q]: kept kernel mass inside the window j < length - q * stride.
  std::vector<double> denom(nodes, 0.0);
  for (std::size_t j = 0; j < length; ++j) {
    const double w = kernel[j];
    if (w <= threshold || w == 0.0) continue;
    const std::size_t q_end = std::min(nodes, (length - 1 - j) / stride + 1);
    for (std::size_t q = 0; q < q_end; ++q) denom[q] += w;
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double* g = values.data() + r * length + j;
      double* a = acc.data() + r * nodes;
      if (stride == 1) {
        for (std::size_t q = 0; q < q_end; ++q) a[q] += w * g[q];
      } else {
        for (std::size_t q = 0; q < q_end; ++q) a[q] += w * g[q * stride];
      }
    }
  }

  for (std::size_t q = 0; q < nodes; ++q) {
    const std::size_t lag = q * stride;
    const std::size_t usable = length - lag;
    for (std::size_t r = 0; r < n_rows; ++r) {
      double v;
      if (denom[q] < kZeroDenominator) {
        double s = 0.0;
        for (std::size_t j = 0; j < usable; ++j) s += values[r * length + j + lag];
        v = s / static_cast<double>(usable);
      } else {
        v = acc[r * nodes + q] / denom[q];
      }
      curve(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = v;
    }
  }
}

}  // namespace

MomentTable compute_moment_table(const ObservationSet& obs, const ParametrizedModel& model,
                                 const AdmissibleFunction& phi, std::span<const Vector> points,
                                 double t, const MomentTableOptions& options) {
  if (options.stride == 0) throw ArgumentError("stride must be >= 1");
  const double delta = static_cast<double>(options.stride) * obs.h;
  const std::size_t n_delta = steps_for(t, delta, "moment table horizon");
  MomentTable table = empty_table(model, phi, points, delta, n_delta);
  const std::size_t n_rows = model.n_params() + 1;

  if (obs.kind == ObservationKind::kEnsemble) {
    parallel_for(points.size(), options.threads, [&](std::size_t i) {
      const auto it = std::find(obs.points.begin(), obs.points.end(), points[i]);
      if (it == obs.points.end()) throw ArgumentError("trial point has no ensemble in the observations");
      const auto& members = obs.ensemble[static_cast<std::size_t>(it - obs.points.begin())];
      if (members.empty()) throw ArgumentError("ensemble_moment: empty ensemble");
      GeneratorWorkspace ws(model.dim());
      std::vector<double> row(n_rows);
      Matrix& curve = table.curves[i];
      for (const Trajectory& tr : members) accumulate_member(model, phi, tr, options.stride, ws, row, curve);
      curve /= static_cast<double>(members.size());
    });
    return table;
  }

  const Trajectory& series = obs.series;
  const std::size_t max_lag = n_delta * options.stride;
  if (series.length() < max_lag + 2) throw ArgumentError("series too short for the requested horizon");
  const double kappa = options.bandwidth.value_or(
      default_bandwidth(series.length() - max_lag, series.dim(), coordinate_std(series)));
  if (!(kappa > 0.0)) throw ArgumentError("bandwidth must be positive");
  table.bandwidth = kappa;

  const std::size_t length = series.length();
  std::vector<double> values(n_rows * length);
  {
    GeneratorWorkspace ws(model.dim());
    std::vector<double> row(n_rows);
    for (std::size_t j = 0; j < length; ++j) {
      generator_row(model, phi, series.state(j), ws, row);
      for (std::size_t r = 0; r < n_rows; ++r) values[r * length + j] = row[r];
    }
  }
  parallel_for(points.size(), options.threads, [&](std::size_t i) {
    kernel_curves(series, values, n_rows, points[i], kappa, options.stride, options.kernel_cutoff,
                  table.curves[i]);
  });
  return table;
}

MomentTable simulate_moment_table(const SdeSystem& system, const ParametrizedModel& model,
                                  const AdmissibleFunction& phi, std::span<const Vector> points,
                                  std::size_t members, double h, double t, std::uint64_t seed,
                                  const MomentTableOptions& options) {
  if (options.stride == 0) throw ArgumentError("stride must be >= 1");
  if (members == 0) throw ArgumentError("ensemble_moment: empty ensemble");
  const double delta = static_cast<double>(options.stride) * h;
  const std::size_t n_delta = steps_for(t, delta, "moment table horizon");
  const std::size_t n_steps = n_delta * options.stride;
  MomentTable table = empty_table(model, phi, points, delta, n_delta);
  const std::size_t n_rows = model.n_params() + 1;

  parallel_for(points.size(), options.threads, [&](std::size_t i) {
    GeneratorWorkspace ws(model.dim());
    std::vector<double> row(n_rows);
    Matrix& curve = table.curves[i];
    for (std::size_t k = 0; k < members; ++k) {
      const Trajectory tr = simulate_member(system, points[i], h, n_steps, seed, i, k);
      accumulate_member(model, phi, tr, options.stride, ws, row, curve);
    }
    curve /= static_cast<double>(members);
  });
  return table;
}

std::vector<double> autocorrelation(const Trajectory& series, std::size_t max_lag,
                                    std::size_t lag_step) {
  const std::size_t n = series.length();
  if (lag_step == 0 || n < max_lag * lag_step + 2) throw ArgumentError("autocorrelation: series too short");
  const Vector x = series.states.row(0).transpose();
  const double mean = x.mean();
  double var = 0.0;
  for (std::size_t j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
  std::vector<double> rho(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    const std::size_t lag = k * lag_step;
    double c = 0.0;
    for (std::size_t j = 0; j + lag < n; ++j) c += (x[j] - mean) * (x[j + lag] - mean);
    rho[k] = c / var;
  }
  return rho;
}

double autocorrelation_decay_rate(const Trajectory& series, std::size_t max_lag,
                                  std::size_t lag_step) {
  const std::vector<double> rho = autocorrelation(series, max_lag, lag_step);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 1; k < rho.size(); ++k) {
    if (rho[k] <= 0.05) break;
    const double tau = static_cast<double>(k * lag_step) * series.h;
    num += tau * std::log(rho[k]);
    den += tau * tau;
  }
  if (den == 0.0) throw NumericError("autocorrelation decays within one lag step");
  return -num / den;
}

}  // namespace sdeinfer
