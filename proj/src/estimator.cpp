#include "sdeinfer/estimator.hpp"

#include "sdeinfer/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sdeinfer {

TrialPoints draw_trial_points(std::size_t m, std::size_t dim, std::uint64_t seed) {
  if (m == 0 || dim == 0) throw ArgumentError("draw_trial_points: need m >= 1 and d >= 1");
  RandomStream rng =
      RandomStream::derived(seed, {static_cast<std::uint64_t>(StreamTag::kTrialPoints), dim});
  TrialPoints out;
  out.seed = seed;
  out.points.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vector p(static_cast<Eigen::Index>(dim));
    rng.fill_normal({p.data(), dim});
    out.points.push_back(std::move(p));
  }
  return out;
}

LinearSystem assemble_system(const MomentTable& table, double t) {
  const std::size_t n_delta = steps_for(t, table.delta, "assemble_system");
  if (n_delta + 1 > table.n_nodes()) {
    throw ArgumentError("assemble_system: t = " + std::to_string(t) + " beyond the observed horizon " +
                        std::to_string(table.horizon()));
  }
  const auto m = static_cast<Eigen::Index>(table.n_points());
  const auto n = static_cast<Eigen::Index>(table.n_params);
  LinearSystem sys{Matrix(m, n), Vector(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const Matrix& curve = table.curves[static_cast<std::size_t>(i)];
    sys.b[i] = curve(0, static_cast<Eigen::Index>(n_delta)) - table.phi_at_points[static_cast<std::size_t>(i)];
    if (!std::isfinite(sys.b[i])) {
      throw AssemblyError(static_cast<std::size_t>(i), 0, "non-finite right-hand side at row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      // Row j + 1 of the curve matrix is contiguous across nodes only after a copy.
      const Eigen::RowVectorXd row = curve.row(j + 1).head(static_cast<Eigen::Index>(n_delta + 1));
      sys.A(i, j) = trapezoid_integrate({row.data(), static_cast<std::size_t>(row.size())}, table.delta);
      if (!std::isfinite(sys.A(i, j))) {
        throw AssemblyError(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                            "non-finite matrix entry at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
  return sys;
}

double default_rank_tolerance(std::size_t rows, std::size_t cols) noexcept {
  return std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, cols));
}

LeastSquaresSolution min_norm_least_squares(const Matrix& A, const Vector& b,
                                            std::optional<double> rank_tol) {
  if (A.rows() != b.size()) throw ArgumentError("min_norm_least_squares: A and b row counts differ");
  if (!A.allFinite() || !b.allFinite()) throw ArgumentError("min_norm_least_squares: non-finite input");
  const double tol = rank_tol.value_or(
      default_rank_tolerance(static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols())));

  LeastSquaresSolution out;
  out.theta = Vector::Zero(A.cols());
  if (A.rows() == 0 || A.cols() == 0) {
    out.residual_norm = b.norm();
    out.condition = std::numeric_limits<double>::infinity();
    return out;
  }

  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
  out.singular_values = svd.singularValues();
  const Vector& s = out.singular_values;
  const double cut = s.size() > 0 ? tol * s[0] : 0.0;

  // theta = V diag(1/s_i, s_i > cut) U^T b
  const Vector utb = svd.matrixU().transpose() * b;
  Vector scaled = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > cut && s[i] > 0.0) {
      scaled[i] = utb[i] / s[i];
      ++out.effective_rank;
    }
  }
  out.theta = svd.matrixV() * scaled;
  out.residual_norm = (A * out.theta - b).norm();
  const double smallest = s.size() > 0 ? s[s.size() - 1] : 0.0;
  out.condition = (out.effective_rank == static_cast<std::size_t>(s.size()) && smallest > 0.0)
                      ? s[0] / smallest
                      : std::numeric_limits<double>::infinity();
  return out;
}

LinearSystemEstimate estimate(const MomentTable& table, double t, std::optional<double> rank_tol) {
  LinearSystem sys = assemble_system(table, t);
  LeastSquaresSolution sol = min_norm_least_squares(sys.A, sys.b, rank_tol);
  LinearSystemEstimate est;
  est.t = t;
  est.A = std::move(sys.A);
  est.b = std::move(sys.b);
  est.theta_hat = std::move(sol.theta);
  est.singular_values = std::move(sol.singular_values);
  est.effective_rank = sol.effective_rank;
  est.residual_norm = sol.residual_norm;
  est.condition = sol.condition;
  return est;
}

double relative_error(VectorCRef theta_hat, VectorCRef theta_true) {
  if (theta_hat.size() != theta_true.size()) throw ArgumentError("relative_error: length mismatch");
  const double scale = theta_true.norm();
  if (scale == 0.0) throw ArgumentError("relative_error: true parameter is zero");
  return (theta_hat - theta_true).norm() / scale;
}

std::vector<SweepPoint> error_sweep(const MomentTable& table, VectorCRef theta_true,
                                    std::span<const double> t_grid, std::optional<double> rank_tol) {
  if (theta_true.size() != static_cast<Eigen::Index>(table.n_params)) {
    throw ArgumentError("error_sweep: theta_true has the wrong length");
  }
  std::vector<SweepPoint> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    SweepPoint point;
    point.t = t;
    try {
      point.estimate = estimate(table, t, rank_tol);
      point.relative_error = relative_error(point.estimate.theta_hat, theta_true);
    } catch (const std::exception& e) {
      point.failure = e.what();
      point.relative_error = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace sdeinfer
