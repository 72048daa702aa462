#pragma once

// Parametrized SDE families whose drift f(x; theta) = sum_j theta_j f_j(x)
// and diffusion G(x; theta) = sum_j theta_j G_j(x) are linear in theta,
// together with the bounded test functions ("admissible functions") used to
// build estimating equations.
//
// Registry names
//   basis:  ou2        f = (x, 0),          G = (0, 2)                d = 1
//           cubic4     f = (x, x^3, 0, 0),  G = (0, 0, 2, 2x^2)       d = 1
//           linear2d6  f_1..f_4 = entries of a 2x2 drift matrix,
//                      G_5 = diag(2, 0), G_6 = diag(0, 2)             d = 2
//   phi:    gauss          exp(-|x|^2 / 2)                            any d
//           poly_gauss     (1 + x) exp(-x^2 / 2)                      d = 1
//           product_gauss  Phi(x_1) Phi(x_2), Phi(z) = (1+z^2) exp(-z^2/2)  d = 2

#include "sdeinfer/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sdeinfer {

class ParametrizedModel {
 public:
  ParametrizedModel(std::size_t dim, std::vector<VectorField> drift_basis,
                    std::vector<MatrixField> diffusion_basis, std::string name = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_params() const noexcept { return drift_basis_.size(); }
  const std::string& name() const noexcept { return name_; }

  /// f_j(x) written into `out` (length dim).
  void drift_term(std::size_t j, VectorCRef x, VectorRef out) const;
  /// G_j(x) written into `out` (dim x dim).
  void diffusion_term(std::size_t j, VectorCRef x, MatrixRef out) const;

  Vector drift_term(std::size_t j, VectorCRef x) const;
  Matrix diffusion_term(std::size_t j, VectorCRef x) const;

 private:
  std::size_t dim_;
  std::vector<VectorField> drift_basis_;
  std::vector<MatrixField> diffusion_basis_;
  std::string name_;
};

/// Bounded C^2 test function with access to its gradient and Hessian.
class AdmissibleFunction {
 public:
  AdmissibleFunction(std::size_t dim, ScalarField value, VectorField gradient,
                     MatrixField hessian, double sup_bound, std::string name = {});

  /// Derivatives by central differences of `value`: gradient step
  /// 1e-5 (1 + |x_i|), Hessian step 1e-4 (1 + |x_i|).
  static AdmissibleFunction with_finite_differences(std::size_t dim, ScalarField value,
                                                    double sup_bound, std::string name = {});

  std::size_t dim() const noexcept { return dim_; }
  double sup_bound() const noexcept { return sup_bound_; }
  bool analytic_derivatives() const noexcept { return analytic_; }
  const std::string& name() const noexcept { return name_; }

  double value(VectorCRef x) const { return value_(x); }
  void gradient(VectorCRef x, VectorRef out) const { gradient_(x, out); }
  void hessian(VectorCRef x, MatrixRef out) const { hessian_(x, out); }
  Vector gradient(VectorCRef x) const;
  Matrix hessian(VectorCRef x) const;

  /// c * phi with derivatives scaled alike; c must be nonzero.
  AdmissibleFunction scaled(double c) const;

  /// c1 * a + c2 * b; analytic only if both operands are.
  static AdmissibleFunction combination(double c1, const AdmissibleFunction& a, double c2,
                                        const AdmissibleFunction& b);

 private:
  std::size_t dim_;
  ScalarField value_;
  VectorField gradient_;
  MatrixField hessian_;
  double sup_bound_;
  bool analytic_ = true;
  std::string name_;
};

Vector evaluate_drift(const ParametrizedModel& model, VectorCRef theta, VectorCRef x);
Matrix evaluate_diffusion(const ParametrizedModel& model, VectorCRef theta, VectorCRef x);

/// (L_j phi)(x) = f_j(x) . grad phi(x) + 1/2 G_j(x) : hess phi(x), j zero-based.
double generator_apply(const ParametrizedModel& model, std::size_t j,
                       const AdmissibleFunction& phi, VectorCRef x);

/// Scratch buffers for generator_row, sized once per (model, phi).
struct GeneratorWorkspace {
  explicit GeneratorWorkspace(std::size_t dim);
  Vector gradient;
  Matrix hessian;
  Vector drift;
  Matrix diffusion;
};

/// out[0] = phi(x), out[1 + j] = (L_j phi)(x). `out` has n_params + 1 slots.
void generator_row(const ParametrizedModel& model, const AdmissibleFunction& phi, VectorCRef x,
                   GeneratorWorkspace& ws, std::span<double> out);

struct AdmissibilityReport {
  double max_abs_value = 0.0;
  std::vector<double> max_abs_generator;  // per basis index
  double max_gradient_error = 0.0;        // relative, see derivative_check_error
  double max_hessian_error = 0.0;
  bool bound_ok = true;
  bool derivatives_ok = true;
  bool passed() const noexcept { return bound_ok && derivatives_ok; }
};

/// Tolerance for the derivative spot-check.
inline constexpr double kDerivativeCheckTolerance = 1e-5;

/// Relative discrepancy between the declared derivatives of phi and central
/// differences of its value at x: |fd - declared|_inf / max(1, |declared|_inf).
/// Returns {gradient error, Hessian error}.
std::pair<double, double> derivative_check_error(const AdmissibleFunction& phi, VectorCRef x);

AdmissibilityReport validate_admissible(const AdmissibleFunction& phi,
                                        const ParametrizedModel& model,
                                        std::span<const Vector> sample_points);

namespace registry {

ParametrizedModel make_basis(std::string_view name);
AdmissibleFunction make_phi(std::string_view name, std::size_t dim);
std::vector<std::string> basis_names();
std::vector<std::string> phi_names();
/// State dimension the basis is defined on.
std::size_t basis_dim(std::string_view name);
/// True if phi is defined for `dim` (gauss works in any dimension).
bool phi_supports_dim(std::string_view name, std::size_t dim);

}  // namespace registry

}  // namespace sdeinfer
