#pragma once

// Least-squares estimator for drift/diffusion parameters: each trial point
// xi_i contributes one row a_i^T theta = b_i of the estimating equation
//   E phi(X_xi(t)) - phi(xi) = sum_j theta_j int_0^t E (L_j phi)(X_xi(s)) ds,
// and theta_hat is the minimum-norm least-squares solution A^+ b.

#include "sdeinfer/moments.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdeinfer {

/// Trial points drawn once per experiment and then held fixed.
struct TrialPoints {
  std::vector<Vector> points;
  std::uint64_t seed = 0;
  std::size_t size() const noexcept { return points.size(); }
};

/// m i.i.d. standard-normal d-vectors from the trial-point stream of `seed`.
TrialPoints draw_trial_points(std::size_t m, std::size_t dim, std::uint64_t seed);

struct LinearSystem {
  Matrix A;  // m x n
  Vector b;  // m
};

/// b_i = u(t, xi_i; phi) - phi(xi_i), A_ij = trapezoid of u(., xi_i; L_j phi) on [0, t].
/// t must be a positive multiple of the table spacing within its horizon.
LinearSystem assemble_system(const MomentTable& table, double t);

struct LeastSquaresSolution {
  Vector theta;
  Vector singular_values;  // nonincreasing, min(m, n) entries
  std::size_t effective_rank = 0;
  double residual_norm = 0.0;
  double condition = 0.0;  // sigma_1 / sigma_min; inf when rank deficient
};

/// eps * max(m, n), relative to the largest singular value.
double default_rank_tolerance(std::size_t rows, std::size_t cols) noexcept;

/// theta = A^+ b through the SVD, treating sigma_i <= rank_tol * sigma_1 as zero.
LeastSquaresSolution min_norm_least_squares(const Matrix& A, const Vector& b,
                                            std::optional<double> rank_tol = std::nullopt);

struct LinearSystemEstimate {
  double t = 0.0;
  Matrix A;
  Vector b;
  Vector theta_hat;
  Vector singular_values;
  std::size_t effective_rank = 0;
  double residual_norm = 0.0;
  double condition = 0.0;
};

LinearSystemEstimate estimate(const MomentTable& table, double t,
                              std::optional<double> rank_tol = std::nullopt);

/// |theta_hat - theta|_2 / |theta|_2.
double relative_error(VectorCRef theta_hat, VectorCRef theta_true);

struct SweepPoint {
  double t = 0.0;
  double relative_error = 0.0;
  LinearSystemEstimate estimate;
  std::optional<std::string> failure;  // set when this t could not be estimated
};

/// One estimate per t on the shared table; failures are recorded per point.
std::vector<SweepPoint> error_sweep(const MomentTable& table, VectorCRef theta_true,
                                    std::span<const double> t_grid,
                                    std::optional<double> rank_tol = std::nullopt);

}  // namespace sdeinfer
