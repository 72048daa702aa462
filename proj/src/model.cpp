#include "sdeinfer/model.hpp"

#include "sdeinfer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdeinfer {

namespace {

void require_dim(std::size_t expected, Eigen::Index actual, const char* what) {
  if (static_cast<Eigen::Index>(expected) != actual) {
    throw ArgumentError(std::string(what) + ": expected length " + std::to_string(expected) +
                        ", got " + std::to_string(actual));
  }
}

constexpr double kGradientStep = 1e-5;
constexpr double kHessianStep = 1e-4;

double coordinate_step(double base, double xi) { return base * (1.0 + std::abs(xi)); }

void fd_gradient(const ScalarField& f, VectorCRef x, VectorRef out) {
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = coordinate_step(kGradientStep, x[i]);
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    out[i] = (up - down) / (2.0 * step);
  }
}

void fd_hessian(const ScalarField& f, VectorCRef x, MatrixRef out) {
  Vector probe = x;
  const double centre = f(x);
  const Eigen::Index d = x.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double si = coordinate_step(kHessianStep, x[i]);
    probe[i] = x[i] + si;
    const double up = f(probe);
    probe[i] = x[i] - si;
    const double down = f(probe);
    probe[i] = x[i];
    out(i, i) = (up - 2.0 * centre + down) / (si * si);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double sj = coordinate_step(kHessianStep, x[j]);
      double acc = 0.0;
      for (int a : {1, -1}) {
        for (int b : {1, -1}) {
          probe[i] = x[i] + a * si;
          probe[j] = x[j] + b * sj;
          acc += a * b * f(probe);
        }
      }
      probe[i] = x[i];
      probe[j] = x[j];
      out(i, j) = out(j, i) = acc / (4.0 * si * sj);
    }
  }
}

}  // namespace

ParametrizedModel::ParametrizedModel(std::size_t dim, std::vector<VectorField> drift_basis,
                                     std::vector<MatrixField> diffusion_basis, std::string name)
    : dim_(dim),
      drift_basis_(std::move(drift_basis)),
      diffusion_basis_(std::move(diffusion_basis)),
      name_(std::move(name)) {
  if (dim_ == 0) throw ArgumentError("ParametrizedModel: dimension must be positive");
  if (drift_basis_.empty()) throw ArgumentError("ParametrizedModel: empty basis");
  if (drift_basis_.size() != diffusion_basis_.size()) {
    throw ArgumentError("ParametrizedModel: drift and diffusion bases differ in size");
  }
}

void ParametrizedModel::drift_term(std::size_t j, VectorCRef x, VectorRef out) const {
  drift_basis_.at(j)(x, out);
}

void ParametrizedModel::diffusion_term(std::size_t j, VectorCRef x, MatrixRef out) const {
  diffusion_basis_.at(j)(x, out);
}

Vector ParametrizedModel::drift_term(std::size_t j, VectorCRef x) const {
  require_dim(dim_, x.size(), "drift_term");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim_));
  drift_term(j, x, out);
  return out;
}

Matrix ParametrizedModel::diffusion_term(std::size_t j, VectorCRef x) const {
  require_dim(dim_, x.size(), "diffusion_term");
  const auto d = static_cast<Eigen::Index>(dim_);
  Matrix out = Matrix::Zero(d, d);
  diffusion_term(j, x, out);
  if ((out - out.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ArgumentError("diffusion basis " + std::to_string(j) + " is not symmetric");
  }
  return out;
}

AdmissibleFunction::AdmissibleFunction(std::size_t dim, ScalarField value, VectorField gradient,
                                       MatrixField hessian, double sup_bound, std::string name)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)),
      sup_bound_(sup_bound),
      name_(std::move(name)) {
  if (!(sup_bound_ > 0.0)) throw ArgumentError("AdmissibleFunction: sup_bound must be positive");
  if (!value_ || !gradient_ || !hessian_) {
    throw ArgumentError("AdmissibleFunction: value, gradient and hessian are required");
  }
}

AdmissibleFunction AdmissibleFunction::with_finite_differences(std::size_t dim, ScalarField value,
                                                               double sup_bound, std::string name) {
  ScalarField f = value;
  AdmissibleFunction phi(
      dim, std::move(value), [f](VectorCRef x, VectorRef out) { fd_gradient(f, x, out); },
      [f](VectorCRef x, MatrixRef out) { fd_hessian(f, x, out); }, sup_bound, std::move(name));
  phi.analytic_ = false;
  return phi;
}

Vector AdmissibleFunction::gradient(VectorCRef x) const {
  require_dim(dim_, x.size(), "gradient");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim_));
  gradient_(x, out);
  return out;
}

Matrix AdmissibleFunction::hessian(VectorCRef x) const {
  require_dim(dim_, x.size(), "hessian");
  const auto d = static_cast<Eigen::Index>(dim_);
  Matrix out = Matrix::Zero(d, d);
  hessian_(x, out);
  return out;
}

AdmissibleFunction AdmissibleFunction::scaled(double c) const {
  if (c == 0.0 || !std::isfinite(c)) throw ArgumentError("scaled: factor must be finite and nonzero");
  auto value = value_;
  auto gradient = gradient_;
  auto hessian = hessian_;
  AdmissibleFunction out(
      dim_, [value, c](VectorCRef x) { return c * value(x); },
      [gradient, c](VectorCRef x, VectorRef g) {
        gradient(x, g);
        g *= c;
      },
      [hessian, c](VectorCRef x, MatrixRef h) {
        hessian(x, h);
        h *= c;
      },
      std::abs(c) * sup_bound_, name_.empty() ? std::string{} : std::to_string(c) + "*" + name_);
  out.analytic_ = analytic_;
  return out;
}

AdmissibleFunction AdmissibleFunction::combination(double c1, const AdmissibleFunction& a,
                                                   double c2, const AdmissibleFunction& b) {
  if (a.dim_ != b.dim_) throw ArgumentError("combination: dimension mismatch");
  const std::size_t d = a.dim_;
  auto va = a.value_, vb = b.value_;
  auto ga = a.gradient_, gb = b.gradient_;
  auto ha = a.hessian_, hb = b.hessian_;
  AdmissibleFunction out(
      d, [=](VectorCRef x) { return c1 * va(x) + c2 * vb(x); },
      [=](VectorCRef x, VectorRef g) {
        Vector tmp = Vector::Zero(static_cast<Eigen::Index>(d));
        ga(x, g);
        gb(x, tmp);
        g = c1 * g + c2 * tmp;
      },
      [=](VectorCRef x, MatrixRef h) {
        const auto n = static_cast<Eigen::Index>(d);
        Matrix tmp = Matrix::Zero(n, n);
        ha(x, h);
        hb(x, tmp);
        h = c1 * h + c2 * tmp;
      },
      std::abs(c1) * a.sup_bound_ + std::abs(c2) * b.sup_bound_);
  out.analytic_ = a.analytic_ && b.analytic_;
  return out;
}

Vector evaluate_drift(const ParametrizedModel& model, VectorCRef theta, VectorCRef x) {
  require_dim(model.n_params(), theta.size(), "evaluate_drift theta");
  require_dim(model.dim(), x.size(), "evaluate_drift x");
  const auto d = static_cast<Eigen::Index>(model.dim());
  Vector out = Vector::Zero(d);
  Vector term(d);
  for (std::size_t j = 0; j < model.n_params(); ++j) {
    term.setZero();
    model.drift_term(j, x, term);
    out += theta[static_cast<Eigen::Index>(j)] * term;
  }
  return out;
}

Matrix evaluate_diffusion(const ParametrizedModel& model, VectorCRef theta, VectorCRef x) {
  require_dim(model.n_params(), theta.size(), "evaluate_diffusion theta");
  require_dim(model.dim(), x.size(), "evaluate_diffusion x");
  const auto d = static_cast<Eigen::Index>(model.dim());
  Matrix out = Matrix::Zero(d, d);
  Matrix term(d, d);
  for (std::size_t j = 0; j < model.n_params(); ++j) {
    term.setZero();
    model.diffusion_term(j, x, term);
    out += theta[static_cast<Eigen::Index>(j)] * term;
  }
  return out;
}

GeneratorWorkspace::GeneratorWorkspace(std::size_t dim)
    : gradient(Vector::Zero(static_cast<Eigen::Index>(dim))),
      hessian(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
      drift(Vector::Zero(static_cast<Eigen::Index>(dim))),
      diffusion(Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

void generator_row(const ParametrizedModel& model, const AdmissibleFunction& phi, VectorCRef x,
                   GeneratorWorkspace& ws, std::span<double> out) {
  out[0] = phi.value(x);
  phi.gradient(x, ws.gradient);
  phi.hessian(x, ws.hessian);
  for (std::size_t j = 0; j < model.n_params(); ++j) {
    ws.drift.setZero();
    ws.diffusion.setZero();
    model.drift_term(j, x, ws.drift);
    model.diffusion_term(j, x, ws.diffusion);
    out[j + 1] = ws.drift.dot(ws.gradient) + 0.5 * ws.diffusion.cwiseProduct(ws.hessian).sum();
  }
}

double generator_apply(const ParametrizedModel& model, std::size_t j,
                       const AdmissibleFunction& phi, VectorCRef x) {
  if (j >= model.n_params()) {
    throw ArgumentError("generator_apply: basis index " + std::to_string(j) + " out of range");
  }
  require_dim(model.dim(), x.size(), "generator_apply x");
  require_dim(model.dim(), static_cast<Eigen::Index>(phi.dim()), "generator_apply phi");
  const Vector f = model.drift_term(j, x);
  const Matrix G = model.diffusion_term(j, x);
  return f.dot(phi.gradient(x)) + 0.5 * G.cwiseProduct(phi.hessian(x)).sum();
}

std::pair<double, double> derivative_check_error(const AdmissibleFunction& phi, VectorCRef x) {
  const auto d = static_cast<Eigen::Index>(phi.dim());
  ScalarField value = [&phi](VectorCRef y) { return phi.value(y); };
  Vector fd_g(d);
  Matrix fd_h(d, d);
  fd_gradient(value, x, fd_g);
  fd_hessian(value, x, fd_h);
  const Vector g = phi.gradient(x);
  const Matrix h = phi.hessian(x);
  const double g_err = (fd_g - g).lpNorm<Eigen::Infinity>() / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  const double h_err = (fd_h - h).lpNorm<Eigen::Infinity>() / std::max(1.0, h.lpNorm<Eigen::Infinity>());
  return {g_err, h_err};
}

AdmissibilityReport validate_admissible(const AdmissibleFunction& phi,
                                        const ParametrizedModel& model,
                                        std::span<const Vector> sample_points) {
  if (sample_points.empty()) throw ArgumentError("validate_admissible: no sample points");
  AdmissibilityReport report;
  report.max_abs_generator.assign(model.n_params(), 0.0);
  for (const Vector& x : sample_points) {
    report.max_abs_value = std::max(report.max_abs_value, std::abs(phi.value(x)));
    for (std::size_t j = 0; j < model.n_params(); ++j) {
      report.max_abs_generator[j] =
          std::max(report.max_abs_generator[j], std::abs(generator_apply(model, j, phi, x)));
    }
    const auto [g_err, h_err] = derivative_check_error(phi, x);
    report.max_gradient_error = std::max(report.max_gradient_error, g_err);
    report.max_hessian_error = std::max(report.max_hessian_error, h_err);
  }
  report.bound_ok = report.max_abs_value <= phi.sup_bound();
  // FD-backed functions would only be compared against themselves.
  report.derivatives_ok = !phi.analytic_derivatives() ||
                          (report.max_gradient_error <= kDerivativeCheckTolerance &&
                           report.max_hessian_error <= kDerivativeCheckTolerance);
  return report;
}

namespace registry {

namespace {

ParametrizedModel ou2() {
  std::vector<VectorField> f{
      [](VectorCRef x, VectorRef out) { out[0] = x[0]; },
      [](VectorCRef, VectorRef out) { out[0] = 0.0; },
  };
  std::vector<MatrixField> g{
      [](VectorCRef, MatrixRef out) { out(0, 0) = 0.0; },
      [](VectorCRef, MatrixRef out) { out(0, 0) = 2.0; },
  };
  return ParametrizedModel(1, std::move(f), std::move(g), "ou2");
}

ParametrizedModel cubic4() {
  std::vector<VectorField> f{
      [](VectorCRef x, VectorRef out) { out[0] = x[0]; },
      [](VectorCRef x, VectorRef out) { out[0] = x[0] * x[0] * x[0]; },
      [](VectorCRef, VectorRef out) { out[0] = 0.0; },
      [](VectorCRef, VectorRef out) { out[0] = 0.0; },
  };
  std::vector<MatrixField> g{
      [](VectorCRef, MatrixRef out) { out(0, 0) = 0.0; },
      [](VectorCRef, MatrixRef out) { out(0, 0) = 0.0; },
      [](VectorCRef, MatrixRef out) { out(0, 0) = 2.0; },
      [](VectorCRef x, MatrixRef out) { out(0, 0) = 2.0 * x[0] * x[0]; },
  };
  return ParametrizedModel(1, std::move(f), std::move(g), "cubic4");
}

// theta_1..theta_4 fill the drift matrix row-wise, theta_5/6 the diagonal diffusion.
ParametrizedModel linear2d6() {
  std::vector<VectorField> f;
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 2; ++col) {
      f.emplace_back([row, col](VectorCRef x, VectorRef out) {
        out.setZero();
        out[row] = x[col];
      });
    }
  }
  f.emplace_back([](VectorCRef, VectorRef out) { out.setZero(); });
  f.emplace_back([](VectorCRef, VectorRef out) { out.setZero(); });
  std::vector<MatrixField> g;
  for (int k = 0; k < 4; ++k) g.emplace_back([](VectorCRef, MatrixRef out) { out.setZero(); });
  for (int k = 0; k < 2; ++k) {
    g.emplace_back([k](VectorCRef, MatrixRef out) {
      out.setZero();
      out(k, k) = 2.0;
    });
  }
  return ParametrizedModel(2, std::move(f), std::move(g), "linear2d6");
}

AdmissibleFunction gauss(std::size_t dim) {
  return AdmissibleFunction(
      dim, [](VectorCRef x) { return std::exp(-0.5 * x.squaredNorm()); },
      [](VectorCRef x, VectorRef out) { out = -std::exp(-0.5 * x.squaredNorm()) * x; },
      [](VectorCRef x, MatrixRef out) {
        const double v = std::exp(-0.5 * x.squaredNorm());
        out = v * (x * x.transpose());
        out.diagonal().array() -= v;
      },
      1.0, "gauss");
}

// (1 + x) e^{-x^2/2}; maximum at x = (sqrt 5 - 1) / 2.
AdmissibleFunction poly_gauss() {
  const double xmax = 0.5 * (std::sqrt(5.0) - 1.0);
  const double sup = (1.0 + xmax) * std::exp(-0.5 * xmax * xmax);
  return AdmissibleFunction(
      1, [](VectorCRef x) { return (1.0 + x[0]) * std::exp(-0.5 * x[0] * x[0]); },
      [](VectorCRef x, VectorRef out) {
        const double z = x[0];
        out[0] = (1.0 - z - z * z) * std::exp(-0.5 * z * z);
      },
      [](VectorCRef x, MatrixRef out) {
        const double z = x[0];
        out(0, 0) = (z * z * z + z * z - 3.0 * z - 1.0) * std::exp(-0.5 * z * z);
      },
      sup, "poly_gauss");
}

struct Quadratic {
  static double value(double z) { return (1.0 + z * z) * std::exp(-0.5 * z * z); }
  static double d1(double z) { return (z - z * z * z) * std::exp(-0.5 * z * z); }
  static double d2(double z) {
    const double z2 = z * z;
    return (z2 * z2 - 4.0 * z2 + 1.0) * std::exp(-0.5 * z2);
  }
};

// Phi(z) = (1 + z^2) e^{-z^2/2} peaks at |z| = 1 with value 2 e^{-1/2}.
AdmissibleFunction product_gauss() {
  using Q = Quadratic;
  return AdmissibleFunction(
      2, [](VectorCRef x) { return Q::value(x[0]) * Q::value(x[1]); },
      [](VectorCRef x, VectorRef out) {
        out[0] = Q::d1(x[0]) * Q::value(x[1]);
        out[1] = Q::value(x[0]) * Q::d1(x[1]);
      },
      [](VectorCRef x, MatrixRef out) {
        out(0, 0) = Q::d2(x[0]) * Q::value(x[1]);
        out(1, 1) = Q::value(x[0]) * Q::d2(x[1]);
        out(0, 1) = out(1, 0) = Q::d1(x[0]) * Q::d1(x[1]);
      },
      4.0 * std::exp(-1.0), "product_gauss");
}

}  // namespace

ParametrizedModel make_basis(std::string_view name) {
  if (name == "ou2") return ou2();
  if (name == "cubic4") return cubic4();
  if (name == "linear2d6") return linear2d6();
  throw RegistryError("unknown basis '" + std::string(name) + "'");
}

std::size_t basis_dim(std::string_view name) { return make_basis(name).dim(); }

AdmissibleFunction make_phi(std::string_view name, std::size_t dim) {
  if (!phi_supports_dim(name, dim)) {
    if (name == "gauss" || name == "poly_gauss" || name == "product_gauss") {
      throw ArgumentError("phi '" + std::string(name) + "' is not defined in dimension " +
                          std::to_string(dim));
    }
    throw RegistryError("unknown phi '" + std::string(name) + "'");
  }
  if (name == "gauss") return gauss(dim);
  if (name == "poly_gauss") return poly_gauss();
  return product_gauss();
}

bool phi_supports_dim(std::string_view name, std::size_t dim) {
  if (name == "gauss") return dim >= 1;
  if (name == "poly_gauss") return dim == 1;
  if (name == "product_gauss") return dim == 2;
  return false;
}

std::vector<std::string> basis_names() { return {"ou2", "cubic4", "linear2d6"}; }
std::vector<std::string> phi_names() { return {"gauss", "poly_gauss", "product_gauss"}; }

}  // namespace registry

}  // namespace sdeinfer
