#pragma once

// Closed forms used as independent references in several test files.

#include "sdeinfer/moments.hpp"

#include <cmath>

namespace oracle {

using sdeinfer::Matrix;
using sdeinfer::Vector;

/// Law of X(t) for dX = A X dt + sqrt(2 Sigma) dW, X(0) = xi.
struct OuLaw {
  double mean;
  double var;
};

inline OuLaw ou_law(double A, double Sigma, double xi, double t) {
  return {xi * std::exp(A * t), Sigma * (1.0 - std::exp(2.0 * A * t)) / (-A)};
}

/// E exp(-X^2/2) for X ~ N(mu, v).
inline double gauss_phi_mean(double mu, double v) {
  return std::exp(-mu * mu / (2.0 * (1.0 + v))) / std::sqrt(1.0 + v);
}

/// E X^2 exp(-X^2/2) for X ~ N(mu, v).
inline double x2_gauss_phi_mean(double mu, double v) {
  const double c = 1.0 / (1.0 + v);
  return gauss_phi_mean(mu, v) * ((mu * c) * (mu * c) + v * c);
}

/// Moment table of phi = exp(-x^2/2) and the ou2 generator terms
/// L_1 phi = -x^2 phi, L_2 phi = (x^2 - 1) phi under the exact OU law.
inline sdeinfer::MomentTable exact_ou_table(double A, double Sigma, const std::vector<Vector>& points,
                                            double delta, std::size_t n_delta) {
  sdeinfer::MomentTable table;
  table.points = points;
  table.delta = delta;
  table.n_params = 2;
  for (const Vector& p : points) {
    const double xi = p[0];
    Matrix curve(3, static_cast<Eigen::Index>(n_delta + 1));
    for (std::size_t k = 0; k <= n_delta; ++k) {
      const double t = delta * static_cast<double>(k);
      const auto law = ou_law(A, Sigma, xi, t);
      const double e_phi = gauss_phi_mean(law.mean, law.var);
      const double e_x2phi = x2_gauss_phi_mean(law.mean, law.var);
      const auto c = static_cast<Eigen::Index>(k);
      curve(0, c) = e_phi;
      curve(1, c) = -e_x2phi;
      curve(2, c) = e_x2phi - e_phi;
    }
    table.curves.push_back(curve);
    table.phi_at_points.push_back(std::exp(-0.5 * xi * xi));
  }
  return table;
}

/// Pseudoinverse through a full-rank factorisation A = B C (B m x r, C r x n):
/// A^+ = C^T (C C^T)^-1 (B^T B)^-1 B^T.
inline Vector factorised_pinv_solve(const Matrix& B, const Matrix& C, const Vector& b) {
  const Matrix btb = B.transpose() * B;
  const Matrix cct = C * C.transpose();
  const Vector y = btb.ldlt().solve(B.transpose() * b);
  return C.transpose() * cct.ldlt().solve(y);
}

}  // namespace oracle
