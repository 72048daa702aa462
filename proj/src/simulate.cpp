#include "sdeinfer/simulate.hpp"

#include "sdeinfer/errors.hpp"
#include "sdeinfer/parallel.hpp"
#include "text_io.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace sdeinfer {

EulerMaruyamaStepper::EulerMaruyamaStepper(const SdeSystem& system)
    : system_(&system),
      drift_(Vector::Zero(static_cast<Eigen::Index>(system.dim_state))),
      diffusion_(Matrix::Zero(static_cast<Eigen::Index>(system.dim_state),
                              static_cast<Eigen::Index>(system.dim_noise))),
      eta_(Vector::Zero(static_cast<Eigen::Index>(system.dim_noise))) {
  if (!system.drift || !system.diffusion) throw ArgumentError("SdeSystem without drift/diffusion");
}

void EulerMaruyamaStepper::step(VectorRef x, double h, RandomStream& rng) {
  rng.fill_normal({eta_.data(), static_cast<std::size_t>(eta_.size())});
  step_with_noise(x, h, eta_);
}

void EulerMaruyamaStepper::step_with_noise(VectorRef x, double h, VectorCRef eta) {
  system_->drift(x, drift_);
  system_->diffusion(x, diffusion_);
  x += drift_ * h + diffusion_ * (std::sqrt(h) * eta);
}

void check_state(VectorCRef x, std::size_t step) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kBlowupThreshold) {
      throw SimulationBlowup(step, "simulation blew up at step " + std::to_string(step) +
                                      " (component " + std::to_string(i) + " = " +
                                      std::to_string(x[i]) + ")");
    }
  }
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(what) + " must be positive");
}

}  // namespace

Trajectory euler_maruyama(const SdeSystem& system, VectorCRef x0, double h,
                          std::size_t n_steps, RandomStream& rng) {
  require_positive(h, "step h");
  if (x0.size() != static_cast<Eigen::Index>(system.dim_state)) {
    throw ArgumentError("euler_maruyama: initial state has wrong dimension");
  }
  Trajectory path{0.0, h, Matrix(x0.size(), static_cast<Eigen::Index>(n_steps + 1))};
  Vector x = x0;
  check_state(x, 0);
  path.states.col(0) = x;
  EulerMaruyamaStepper stepper(system);
  for (std::size_t k = 0; k < n_steps; ++k) {
    stepper.step(x, h, rng);
    check_state(x, k + 1);
    path.states.col(static_cast<Eigen::Index>(k + 1)) = x;
  }
  return path;
}

Trajectory euler_maruyama_with_noise(const SdeSystem& system, VectorCRef x0, double h,
                                     const Matrix& normals) {
  require_positive(h, "step h");
  if (normals.rows() != static_cast<Eigen::Index>(system.dim_noise)) {
    throw ArgumentError("euler_maruyama_with_noise: noise rows must equal dim_noise");
  }
  const Eigen::Index n_steps = normals.cols();
  Trajectory path{0.0, h, Matrix(x0.size(), n_steps + 1)};
  Vector x = x0;
  path.states.col(0) = x;
  EulerMaruyamaStepper stepper(system);
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    stepper.step_with_noise(x, h, normals.col(k));
    check_state(x, static_cast<std::size_t>(k + 1));
    path.states.col(k + 1) = x;
  }
  return path;
}

SdeSystem make_fast_ou_system(std::function<double(double, double)> h_fun,
                              std::function<double(double)> sigma_fun, double epsilon,
                              std::function<double(double)> sigma_prime) {
  require_positive(epsilon, "epsilon");
  if (!sigma_prime) {
    sigma_prime = [sigma_fun](double x) {
      const double step = 1e-5 * (1.0 + std::abs(x));
      return (sigma_fun(x + step) - sigma_fun(x - step)) / (2.0 * step);
    };
  }
  SdeSystem sys;
  sys.dim_state = 2;
  sys.dim_noise = 1;
  sys.dim_observed = 1;
  sys.drift = [h_fun, sigma_fun, sigma_prime, epsilon](VectorCRef s, VectorRef out) {
    const double x = s[0];
    const double y = s[1];
    const double sig = sigma_fun(x);
    out[0] = sig * y / epsilon + h_fun(x, y) - sigma_prime(x) * sig;
    out[1] = -y / (epsilon * epsilon);
  };
  const double fast_noise = std::numbers::sqrt2 / epsilon;
  sys.diffusion = [fast_noise](VectorCRef, MatrixRef out) {
    out(0, 0) = 0.0;
    out(1, 0) = fast_noise;
  };
  // Stationary law of the fast OU process is N(0, 1).
  sys.init_hidden = [](RandomStream& rng, VectorRef hidden) { hidden[0] = rng.normal(); };
  sys.label = "fast_ou";
  return sys;
}

SdeSystem make_fast_ou_system(const FastOuParams& p, double epsilon) {
  if (p.sigma_a <= 0.0 || p.sigma_b < 0.0) {
    throw ArgumentError("fast_ou: need sigma_a > 0 and sigma_b >= 0");
  }
  auto h_fun = [A = p.A, B = p.B](double x, double) { return A * x + B * x * x * x; };
  auto sigma = [a = p.sigma_a, b = p.sigma_b](double x) { return std::sqrt(a + b * x * x); };
  auto sigma_prime = [a = p.sigma_a, b = p.sigma_b](double x) {
    return b * x / std::sqrt(a + b * x * x);
  };
  return make_fast_ou_system(h_fun, sigma, epsilon, sigma_prime);
}

SdeSystem make_langevin_2d_system(const Matrix& M, double sigma, double epsilon,
                                  bool with_fluctuation) {
  require_positive(sigma, "sigma");
  require_positive(epsilon, "epsilon");
  if (M.rows() != 2 || M.cols() != 2) throw ArgumentError("langevin2d: M must be 2x2");
  if (std::abs(M(0, 1) - M(1, 0)) > 1e-12 || Eigen::LLT<Matrix>(M).info() != Eigen::Success) {
    throw ArgumentError("langevin2d: M must be symmetric positive definite");
  }
  SdeSystem sys;
  sys.dim_state = 2;
  sys.dim_noise = 2;
  sys.dim_observed = 2;
  const double scale = with_fluctuation ? 1.0 : 0.0;
  sys.drift = [M, epsilon, scale](VectorCRef x, VectorRef out) {
    // p_1' = -sin, p_2' = -sin / 2
    const double f1 = -std::sin(x[0] / epsilon) / epsilon;
    const double f2 = -0.5 * std::sin(x[1] / epsilon) / epsilon;
    out[0] = -(M(0, 0) * x[0] + M(0, 1) * x[1] + scale * f1);
    out[1] = -(M(1, 0) * x[0] + M(1, 1) * x[1] + scale * f2);
  };
  const double noise = std::sqrt(2.0 * sigma);
  sys.diffusion = [noise](VectorCRef, MatrixRef out) {
    out.setZero();
    out(0, 0) = noise;
    out(1, 1) = noise;
  };
  sys.label = "langevin2d";
  return sys;
}

SdeSystem make_langevin_1d_system(double alpha, double sigma, double epsilon) {
  require_positive(sigma, "sigma");
  require_positive(epsilon, "epsilon");
  SdeSystem sys;
  sys.drift = [alpha, epsilon](VectorCRef x, VectorRef out) {
    out[0] = -(alpha * x[0] - std::sin(x[0] / epsilon) / epsilon);
  };
  const double noise = std::sqrt(2.0 * sigma);
  sys.diffusion = [noise](VectorCRef, MatrixRef out) { out(0, 0) = noise; };
  sys.label = "langevin1d";
  return sys;
}

double sample_ou_exact(double A, double Sigma, double x0, double t, RandomStream& rng) {
  if (!(A < 0.0)) throw ArgumentError("sample_ou_exact: requires A < 0");
  require_positive(Sigma, "Sigma");
  require_positive(t, "t");
  const double decay = std::exp(A * t);
  const double variance = Sigma * (-std::expm1(2.0 * A * t)) / std::abs(A);
  return x0 * decay + std::sqrt(variance) * rng.normal();
}

double bessel_i0(double z) {
  const double az = std::abs(z);
  if (az > 20.0) return std::cyl_bessel_i(0.0, az);
  const double q = 0.25 * az * az;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

HomogenizedLangevin homogenized_langevin_coefficients(double alpha, double sigma, double period,
                                                      const std::function<double(double)>& p,
                                                      std::size_t panels) {
  require_positive(sigma, "sigma");
  require_positive(period, "period");
  if (panels < 10000) throw ArgumentError("homogenization quadrature needs >= 1e4 panels");
  // Periodic integrand: the trapezoid rule reduces to an equal-weight sum.
  double sum_plus = 0.0;
  double sum_minus = 0.0;
  for (std::size_t i = 0; i < panels; ++i) {
    const double y = period * static_cast<double>(i) / static_cast<double>(panels);
    const double v = p(y) / sigma;
    sum_plus += std::exp(v);
    sum_minus += std::exp(-v);
  }
  const double n = static_cast<double>(panels);
  const double z_plus = period * (sum_plus / n);
  const double z_minus = period * (sum_minus / n);
  const double ratio = (period * period) / (z_plus * z_minus);
  return {alpha * ratio, sigma * ratio};
}

Homogenized2d homogenized_2d_coefficients(const Matrix& M, double sigma) {
  require_positive(sigma, "sigma");
  if (M.rows() != 2 || M.cols() != 2) throw ArgumentError("homogenized_2d: M must be 2x2");
  const double i1 = bessel_i0(1.0 / sigma);
  const double i2 = bessel_i0(1.0 / (2.0 * sigma));
  Homogenized2d out;
  out.r1 = 1.0 / (i1 * i1);
  out.r2 = 1.0 / (i2 * i2);
  const Eigen::Vector2d r(out.r1, out.r2);
  out.drift = -(r.asDiagonal() * M);
  out.diffusion = sigma * Matrix(r.asDiagonal());
  return out;
}

std::size_t ObservationSet::dim() const {
  if (kind == ObservationKind::kSingleSeries) return series.dim();
  return points.empty() ? 0 : static_cast<std::size_t>(points.front().size());
}

Vector initial_state(const SdeSystem& system, VectorCRef xi, RandomStream& rng) {
  if (xi.size() != static_cast<Eigen::Index>(system.dim_observed)) {
    throw ArgumentError("trial point dimension does not match observed dimension");
  }
  Vector x = Vector::Zero(static_cast<Eigen::Index>(system.dim_state));
  x.head(xi.size()) = xi;
  const auto hidden = static_cast<Eigen::Index>(system.dim_state - system.dim_observed);
  if (hidden > 0 && system.init_hidden) {
    Vector tail = Vector::Zero(hidden);
    system.init_hidden(rng, tail);
    x.tail(hidden) = tail;
  }
  return x;
}

RandomStream ensemble_stream(std::uint64_t seed, std::size_t point, std::size_t member) {
  return RandomStream::derived(seed, {static_cast<std::uint64_t>(StreamTag::kEnsemble), point, member});
}

Trajectory simulate_member(const SdeSystem& system, VectorCRef xi, double h, std::size_t n_steps,
                           std::uint64_t seed, std::size_t point, std::size_t member) {
  require_positive(h, "step h");
  RandomStream rng = ensemble_stream(seed, point, member);
  Vector x = initial_state(system, xi, rng);
  const auto observed = static_cast<Eigen::Index>(system.dim_observed);
  Trajectory path{0.0, h, Matrix(observed, static_cast<Eigen::Index>(n_steps + 1))};
  path.states.col(0) = x.head(observed);
  EulerMaruyamaStepper stepper(system);
  for (std::size_t k = 0; k < n_steps; ++k) {
    stepper.step(x, h, rng);
    check_state(x, k + 1);
    path.states.col(static_cast<Eigen::Index>(k + 1)) = x.head(observed);
  }
  return path;
}

Trajectory simulate_series(const SdeSystem& system, const SeriesDesign& design,
                           std::uint64_t seed) {
  require_positive(design.h, "step h");
  require_positive(design.T_total, "T_total");
  if (design.burn_in < 0.0 || !(design.burn_in < design.T_total)) {
    throw ArgumentError("series design requires 0 <= burn_in < T_total");
  }
  const auto burn_steps = static_cast<std::size_t>(std::llround(design.burn_in / design.h));
  const auto keep = static_cast<std::size_t>(std::llround(design.T_total / design.h));
  if (keep < 2) throw ArgumentError("series design yields fewer than 2 samples");

  RandomStream rng = RandomStream::derived(seed, {static_cast<std::uint64_t>(StreamTag::kSeries)});
  Vector x;
  if (design.x0.size() > 0) {
    if (design.x0.size() != static_cast<Eigen::Index>(system.dim_state)) {
      throw ArgumentError("series x0 must be a full state");
    }
    x = design.x0;
  } else {
    x = initial_state(system, Vector::Zero(static_cast<Eigen::Index>(system.dim_observed)), rng);
  }

  EulerMaruyamaStepper stepper(system);
  for (std::size_t k = 0; k < burn_steps; ++k) {
    stepper.step(x, design.h, rng);
    check_state(x, k + 1);
  }
  const auto observed = static_cast<Eigen::Index>(system.dim_observed);
  Trajectory path{design.burn_in, design.h, Matrix(observed, static_cast<Eigen::Index>(keep))};
  path.states.col(0) = x.head(observed);
  for (std::size_t k = 1; k < keep; ++k) {
    stepper.step(x, design.h, rng);
    check_state(x, burn_steps + k);
    path.states.col(static_cast<Eigen::Index>(k)) = x.head(observed);
  }
  return path;
}

ObservationSet generate_observations(const SdeSystem& system, const ObservationDesign& design,
                                     std::uint64_t seed, std::size_t threads) {
  ObservationSet obs;
  if (const auto* ens = std::get_if<EnsembleDesign>(&design)) {
    require_positive(ens->h, "step h");
    if (ens->members == 0) throw ArgumentError("ensemble needs at least one member");
    obs.kind = ObservationKind::kEnsemble;
    obs.h = ens->h;
    obs.points = ens->points;
    obs.ensemble.resize(ens->points.size());
    parallel_for(ens->points.size(), threads, [&](std::size_t i) {
      auto& members = obs.ensemble[i];
      members.reserve(ens->members);
      for (std::size_t k = 0; k < ens->members; ++k) {
        members.push_back(simulate_member(system, ens->points[i], ens->h, ens->n_steps, seed, i, k));
      }
    });
  } else {
    const auto& ser = std::get<SeriesDesign>(design);
    obs.kind = ObservationKind::kSingleSeries;
    obs.h = ser.h;
    obs.series = simulate_series(system, ser, seed);
  }
  return obs;
}

void write_observations(std::ostream& out, const ObservationSet& obs) {
  const std::size_t d = obs.dim();
  const bool ensemble = obs.kind == ObservationKind::kEnsemble;
  const std::size_t m = ensemble ? obs.ensemble.size() : 1;
  const std::size_t members = ensemble ? (m ? obs.ensemble.front().size() : 0) : 1;
  const std::size_t length =
      ensemble ? (members ? obs.ensemble.front().front().length() : 0) : obs.series.length();
  out << "# sdeinfer-observations kind=" << (ensemble ? "ensemble" : "series") << " dim=" << d
      << " h=" << io::format_double(obs.h) << " points=" << m << " members=" << members
      << " length=" << length;
  if (!ensemble) out << " t0=" << io::format_double(obs.series.t0);
  out << '\n' << "point,member,k";
  for (std::size_t c = 1; c <= d; ++c) out << ",x" << c;
  out << '\n';
  auto emit = [&](std::size_t i, std::size_t j, const Trajectory& tr) {
    for (std::size_t k = 0; k < tr.length(); ++k) {
      out << i << ',' << j << ',' << k;
      for (Eigen::Index c = 0; c < tr.states.rows(); ++c) {
        out << ',' << io::format_double(tr.states(c, static_cast<Eigen::Index>(k)));
      }
      out << '\n';
    }
  };
  if (ensemble) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < obs.ensemble[i].size(); ++j) emit(i, j, obs.ensemble[i][j]);
  } else {
    emit(0, 0, obs.series);
  }
}

ObservationSet read_observations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# sdeinfer-observations", 0) != 0) {
    throw ArgumentError("read_observations: missing header");
  }
  std::map<std::string, std::string> header;
  std::istringstream tokens(line.substr(2));
  std::string token;
  while (tokens >> token) {
    const auto eq = token.find('=');
    if (eq != std::string::npos) header[token.substr(0, eq)] = token.substr(eq + 1);
  }
  auto field = [&](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw ArgumentError(std::string("read_observations: missing ") + key);
    return it->second;
  };
  const std::size_t d = std::stoul(field("dim"));
  const std::size_t m = std::stoul(field("points"));
  const std::size_t members = std::stoul(field("members"));
  const std::size_t length = std::stoul(field("length"));
  ObservationSet obs;
  obs.kind = field("kind") == "ensemble" ? ObservationKind::kEnsemble : ObservationKind::kSingleSeries;
  obs.h = io::parse_double(field("h"));
  std::getline(in, line);  // column names

  auto read_path = [&](std::size_t expect_point, std::size_t expect_member) {
    Trajectory tr{0.0, obs.h, Matrix(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(length))};
    for (std::size_t k = 0; k < length; ++k) {
      if (!std::getline(in, line)) throw ArgumentError("read_observations: truncated file");
      const auto cells = io::split(line, ',');
      if (cells.size() != 3 + d || std::stoul(cells[0]) != expect_point ||
          std::stoul(cells[1]) != expect_member || std::stoul(cells[2]) != k) {
        throw ArgumentError("read_observations: malformed row '" + line + "'");
      }
      for (std::size_t c = 0; c < d; ++c) {
        tr.states(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = io::parse_double(cells[3 + c]);
      }
    }
    return tr;
  };

  if (obs.kind == ObservationKind::kEnsemble) {
    obs.ensemble.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < members; ++j) obs.ensemble[i].push_back(read_path(i, j));
      obs.points.push_back(obs.ensemble[i].front().state(0));
    }
  } else {
    obs.series = read_path(0, 0);
    if (header.count("t0")) obs.series.t0 = io::parse_double(header["t0"]);
  }
  return obs;
}

}  // namespace sdeinfer
