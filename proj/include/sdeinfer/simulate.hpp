#pragma once

#include "sdeinfer/rng.hpp"
#include "sdeinfer/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace sdeinfer {

/// dX = f(X) dt + g(X) dW with X in R^dim_state and W in R^dim_noise. The
/// first `dim_observed` components are the resolved (slow) variables; the
/// remainder are hidden fast variables that observations never see.
struct SdeSystem {
  std::size_t dim_state = 1;
  std::size_t dim_noise = 1;
  std::size_t dim_observed = 1;
  VectorField drift;      // out: dim_state
  MatrixField diffusion;  // out: dim_state x dim_noise
  /// Fills the hidden components of a full initial state; unset means zeros.
  std::function<void(RandomStream&, VectorRef hidden)> init_hidden;
  std::string label;
};

/// Uniformly sampled path; states.col(k) ~ X(t0 + k h).
struct Trajectory {
  double t0 = 0.0;
  double h = 1.0;
  Matrix states;  // dim x length

  std::size_t dim() const noexcept { return static_cast<std::size_t>(states.rows()); }
  std::size_t length() const noexcept { return static_cast<std::size_t>(states.cols()); }
  auto state(std::size_t k) const { return states.col(static_cast<Eigen::Index>(k)); }
};

/// Components with |x_i| above this abort a simulation.
inline constexpr double kBlowupThreshold = 1e8;

/// Single Euler-Maruyama integrator with preallocated scratch space.
class EulerMaruyamaStepper {
 public:
  explicit EulerMaruyamaStepper(const SdeSystem& system);

  /// x <- x + f(x) h + g(x) sqrt(h) eta with eta i.i.d. standard normal.
  void step(VectorRef x, double h, RandomStream& rng);
  /// Same update with caller-supplied standard normals (length dim_noise).
  void step_with_noise(VectorRef x, double h, VectorCRef eta);

 private:
  const SdeSystem* system_;
  Vector drift_;
  Matrix diffusion_;
  Vector eta_;
};

/// Throws SimulationBlowup if x is non-finite or exceeds kBlowupThreshold.
void check_state(VectorCRef x, std::size_t step);

/// Full-state Euler-Maruyama path with n_steps + 1 states.
Trajectory euler_maruyama(const SdeSystem& system, VectorCRef x0, double h,
                          std::size_t n_steps, RandomStream& rng);

/// Euler-Maruyama driven by given standard normals, one column per step
/// (dim_noise x n_steps). Used to couple paths across step sizes.
Trajectory euler_maruyama_with_noise(const SdeSystem& system, VectorCRef x0, double h,
                                     const Matrix& normals);

struct FastOuParams {
  double A = -0.5;
  double B = 0.0;
  double sigma_a = 0.5;
  double sigma_b = 0.0;
};

/// Slow/fast pair (X, Y):
///   dX = ((1/eps) sigma(X) Y + h(X, Y) - sigma'(X) sigma(X)) dt
///   dY = -(1/eps^2) Y dt + (sqrt 2 / eps) dV
/// sigma' falls back to central differences when not given.
SdeSystem make_fast_ou_system(std::function<double(double, double)> h_fun,
                              std::function<double(double)> sigma_fun, double epsilon,
                              std::function<double(double)> sigma_prime = {});

/// h(x, y) = A x + B x^3, sigma(x) = sqrt(sigma_a + sigma_b x^2).
SdeSystem make_fast_ou_system(const FastOuParams& params, double epsilon);

/// dX = -(M X + (1/eps) (p_1'(X_1/eps), p_2'(X_2/eps))) dt + sqrt(2 sigma) dU
/// with p_1 = cos, p_2 = cos / 2. `with_fluctuation = false` drops the p terms.
SdeSystem make_langevin_2d_system(const Matrix& M, double sigma, double epsilon,
                                  bool with_fluctuation = true);

/// dX = -(alpha X + (1/eps) p'(X/eps)) dt + sqrt(2 sigma) dU with p = cos.
SdeSystem make_langevin_1d_system(double alpha, double sigma, double epsilon);

/// Draw from the exact transition law of dX = A X dt + sqrt(2 Sigma) dW
/// after time t: Normal(x0 e^{A t}, Sigma (1 - e^{2 A t}) / |A|). Requires A < 0.
double sample_ou_exact(double A, double Sigma, double x0, double t, RandomStream& rng);

/// Modified Bessel function I_0. Power series for |z| <= 20 (relative
/// tolerance 1e-12), std::cyl_bessel_i beyond.
double bessel_i0(double z);

struct HomogenizedLangevin {
  double A;
  double Sigma;
};

/// A = alpha L^2 / (Z+ Z-), Sigma = sigma L^2 / (Z+ Z-),
/// Z+- = int_0^L exp(+-p(y)/sigma) dy by the periodic trapezoid rule.
HomogenizedLangevin homogenized_langevin_coefficients(double alpha, double sigma, double period,
                                                      const std::function<double(double)>& p,
                                                      std::size_t panels = 1 << 14);

struct Homogenized2d {
  double r1;
  double r2;
  Matrix drift;      // -R M
  Matrix diffusion;  // sigma R
};

/// R = diag(I_0(1/sigma)^-2, I_0(1/(2 sigma))^-2) for p_1 = cos, p_2 = cos / 2.
Homogenized2d homogenized_2d_coefficients(const Matrix& M, double sigma);

struct EnsembleDesign {
  std::vector<Vector> points;  // trial points xi_i (observed dimension)
  std::size_t members = 1;     // N
  std::size_t n_steps = 0;     // n_t, horizon t = n_t h
  double h = 1e-3;
};

struct SeriesDesign {
  double T_total = 1.0;
  double h = 1e-3;
  double burn_in = 10.0;
  Vector x0;  // full initial state; empty means zeros
};

using ObservationDesign = std::variant<EnsembleDesign, SeriesDesign>;

enum class ObservationKind { kEnsemble, kSingleSeries };

struct ObservationSet {
  ObservationKind kind = ObservationKind::kEnsemble;
  double h = 1e-3;
  std::vector<Vector> points;                       // Ensemble: start points
  std::vector<std::vector<Trajectory>> ensemble;    // [point][member], observed comps
  Trajectory series;                                // SingleSeries
  std::size_t dim() const;
};

/// Initial full state for a trajectory started at observed state xi.
Vector initial_state(const SdeSystem& system, VectorCRef xi, RandomStream& rng);

/// Stream for ensemble member `member` of trial point `point`.
RandomStream ensemble_stream(std::uint64_t seed, std::size_t point, std::size_t member);

/// Observed components of an Euler-Maruyama path from trial point xi, using
/// the (point, member) stream. Shared by the materialised and streaming paths.
Trajectory simulate_member(const SdeSystem& system, VectorCRef xi, double h, std::size_t n_steps,
                           std::uint64_t seed, std::size_t point, std::size_t member);

/// Simulate a long path, discard the first `burn_in` time units and keep the
/// following round(T_total / h) states (observed components).
Trajectory simulate_series(const SdeSystem& system, const SeriesDesign& design,
                           std::uint64_t seed);

ObservationSet generate_observations(const SdeSystem& system, const ObservationDesign& design,
                                     std::uint64_t seed, std::size_t threads = 1);

/// CSV layout:
///   # sdeinfer-observations kind=<ensemble|series> dim=<d> h=<h> points=<m> members=<N> length=<L>
///   point,member,k,x1,...,xd
///   one row per state, ordered by (point, member, k)
void write_observations(std::ostream& out, const ObservationSet& obs);
ObservationSet read_observations(std::istream& in);

}  // namespace sdeinfer
