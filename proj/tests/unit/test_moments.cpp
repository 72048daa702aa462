#include "oracles.hpp"

#include "sdeinfer/errors.hpp"
#include "sdeinfer/moments.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sdeinfer;

namespace {

Trajectory path_from(std::vector<double> xs, double h = 0.1) {
  Trajectory tr;
  tr.h = h;
  tr.states = Eigen::Map<const Matrix>(xs.data(), 1, static_cast<Eigen::Index>(xs.size()));
  return tr;
}

}  // namespace

TEST_CASE("Gaussian kernel normalisation") {
  CHECK(gaussian_kernel(Vector{{0.0}}) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(gaussian_kernel(Vector::Zero(2)) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
  CHECK(gaussian_kernel(Vector{{1.0, 1.0}}) == doctest::Approx(std::exp(-1.0) / (2.0 * std::numbers::pi)));
}

TEST_CASE("trapezoid rule") {
  const std::vector<double> affine{1.0, 3.0, 5.0, 7.0};  // 1 + 2x on x = 0, 1, 2, 3
  CHECK(std::abs(trapezoid_integrate(affine, 1.0) - (3.0 + 9.0)) < 1e-12);
  const std::vector<double> constant(11, 2.5);
  CHECK(std::abs(trapezoid_integrate(constant, 0.1) - 2.5) < 1e-12);
  CHECK(trapezoid_integrate(std::vector<double>{0.0, 1.0}, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(trapezoid_integrate(std::vector<double>{1.0}, 0.1), ArgumentError);
  CHECK_THROWS_AS(trapezoid_integrate(std::vector<double>{1.0, 2.0}, 0.0), ArgumentError);
}

TEST_CASE("trapezoid of a bounded integrand stays within t * sup") {
  std::vector<double> v(101);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(37.0 * static_cast<double>(k));
  CHECK(std::abs(trapezoid_integrate(v, 0.01)) <= 1.0 + 1e-15);
}

TEST_CASE("ensemble average in member order") {
  const std::vector<Trajectory> members{path_from({0.0, 1.0}), path_from({0.0, 2.0}), path_from({0.0, 6.0})};
  CHECK(ensemble_moment(members, 1, [](VectorCRef x) { return x[0]; }) == doctest::Approx(3.0));
  CHECK(ensemble_moment(members, 0, registry::make_phi("gauss", 1)) == 1.0);
  CHECK_THROWS_AS(ensemble_moment(members, 2, [](VectorCRef x) { return x[0]; }), ArgumentError);
  CHECK_THROWS_AS(ensemble_moment(std::span<const Trajectory>{}, 0, [](VectorCRef) { return 0.0; }),
                  ArgumentError);
}

TEST_CASE("Nadaraya-Watson weights by direct formula") {
  const Trajectory s = path_from({0.0, 0.5, 1.0, -0.5, 2.0});
  const double kappa = 0.7;
  const Vector xi{{0.2}};
  const auto w = nadaraya_watson_weights(s, xi, 1, kappa);
  REQUIRE(w.size() == 4);
  std::vector<double> raw;
  double denom = 0.0;
  for (double x : {0.0, 0.5, 1.0, -0.5}) {
    raw.push_back(std::exp(-0.5 * std::pow((x - 0.2) / kappa, 2)));
    denom += raw.back();
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(w[j] == doctest::Approx(raw[j] / denom).epsilon(1e-14));
    sum += w[j];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  const double expect = (raw[0] * 0.5 + raw[1] * 1.0 + raw[2] * -0.5 + raw[3] * 2.0) / denom;
  CHECK(nadaraya_watson_moment(s, xi, 1, [](VectorCRef x) { return x[0]; }, kappa) ==
        doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("Nadaraya-Watson falls back to uniform weights far from the data") {
  const Trajectory s = path_from({0.0, 0.1, 0.2, 0.3});
  const auto w = nadaraya_watson_weights(s, Vector{{1e3}}, 2, 1e-3);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.5);
  CHECK_THROWS_AS(nadaraya_watson_weights(s, Vector{{0.0}}, 3, 0.1), ArgumentError);
  CHECK_THROWS_AS(nadaraya_watson_weights(s, Vector{{0.0}}, 0, 0.0), ArgumentError);
  CHECK_THROWS_AS(nadaraya_watson_weights(s, Vector::Zero(2), 0, 0.1), ArgumentError);
}

TEST_CASE("default bandwidth") {
  const std::vector<double> scale{2.0};
  CHECK(default_bandwidth(1024, 1, scale) == doctest::Approx(2.0 * std::pow(1024.0, -0.2)));
  const std::vector<double> scale2{1.0, 4.0};
  CHECK(default_bandwidth(4096, 2, scale2) == doctest::Approx(2.0 * std::pow(4096.0, -1.0 / 6.0)));
  CHECK_THROWS_AS(default_bandwidth(1, 1, scale), ArgumentError);
  CHECK_THROWS_AS(default_bandwidth(10, 2, scale), ArgumentError);
}

TEST_CASE("steps_for") {
  CHECK(steps_for(0.5, 1e-3, "t") == 500);
  CHECK(steps_for(0.3, 0.1, "t") == 3);
  CHECK_THROWS_AS(steps_for(0.0015, 1e-3, "t"), ArgumentError);
  CHECK_THROWS_AS(steps_for(0.0, 1e-3, "t"), ArgumentError);
}

TEST_CASE("streamed ensemble table is bit-identical to the stored-observation table") {
  const SdeSystem sys = make_fast_ou_system(FastOuParams{}, 0.1);
  const ParametrizedModel model = registry::make_basis("ou2");
  const AdmissibleFunction phi = registry::make_phi("gauss", 1);
  const std::vector<Vector> points{Vector{{0.4}}, Vector{{-1.2}}, Vector{{0.0}}};
  MomentTableOptions opts;
  opts.stride = 2;
  opts.threads = 2;
  const MomentTable streamed = simulate_moment_table(sys, model, phi, points, 30, 1e-3, 0.04, 5, opts);
  const ObservationSet obs = generate_observations(sys, EnsembleDesign{points, 30, 40, 1e-3}, 5);
  const MomentTable stored = compute_moment_table(obs, model, phi, points, 0.04, opts);
  REQUIRE(streamed.n_nodes() == 21);
  CHECK(streamed.delta == doctest::Approx(2e-3));
  CHECK(streamed.horizon() == doctest::Approx(0.04));
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(streamed.curves[i] == stored.curves[i]);
    CHECK(streamed.phi_at_points[i] == phi.value(points[i]));
  }
  // rows agree with the single-function estimator
  const auto& members = obs.ensemble[1];
  for (std::size_t k : {0, 4, 20}) {
    const double direct = ensemble_moment(members, 2 * k, phi);
    CHECK(stored.curves[1](0, static_cast<Eigen::Index>(k)) == doctest::Approx(direct).epsilon(1e-14));
  }
  const MomentCurve curve =
      moment_curve(obs, points[2], [&](VectorCRef x) { return generator_apply(model, 1, phi, x); }, 0.04, 2);
  REQUIRE(curve.values.size() == 21);
  for (std::size_t k = 0; k < 21; ++k) {
    CHECK(curve.values[k] == doctest::Approx(stored.curves[2](2, static_cast<Eigen::Index>(k))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(compute_moment_table(obs, model, phi, std::vector<Vector>{Vector{{9.0}}}, 0.04, opts),
                  ArgumentError);
}

TEST_CASE("batched kernel table matches the single-point estimator") {
  const SdeSystem sys = make_langevin_1d_system(2.0, 1.0, 0.2);
  const ObservationSet obs = generate_observations(sys, SeriesDesign{30.0, 1e-3, 1.0, {}}, 8);
  const ParametrizedModel model = registry::make_basis("ou2");
  const AdmissibleFunction phi = registry::make_phi("gauss", 1);
  const std::vector<Vector> points{Vector{{0.3}}, Vector{{-0.8}}, Vector{{1.9}}, Vector{{6.0}}};
  MomentTableOptions exact;
  exact.stride = 5;
  exact.kernel_cutoff = 0.0;
  const MomentTable full = compute_moment_table(obs, model, phi, points, 0.05, exact);
  MomentTableOptions fast = exact;
  fast.kernel_cutoff = 1e-20;
  fast.threads = 3;
  const MomentTable cut = compute_moment_table(obs, model, phi, points, 0.05, fast);
  REQUIRE(full.bandwidth);
  const double kappa = *full.bandwidth;
  CHECK(kappa == doctest::Approx(default_bandwidth(obs.series.length() - 50, 1, coordinate_std(obs.series))));

  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k <= 10; ++k) {
      for (std::size_t r = 0; r < 3; ++r) {
        const ScalarField f = [&, r](VectorCRef x) {
          return r == 0 ? phi.value(x) : generator_apply(model, r - 1, phi, x);
        };
        const double single = nadaraya_watson_moment(obs.series, points[i], 5 * k, f, kappa);
        const auto c = static_cast<Eigen::Index>(k);
        CHECK(full.curves[i](static_cast<Eigen::Index>(r), c) == doctest::Approx(single).epsilon(1e-11));
        CHECK(cut.curves[i](static_cast<Eigen::Index>(r), c) == doctest::Approx(single).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("autocorrelation of a stationary OU path decays at rate |A|") {
  RandomStream rng(3);
  const double A = -2.0, h = 0.01;
  Trajectory tr;
  tr.h = h;
  tr.states.resize(1, 200000);
  double x = 0.0;
  for (Eigen::Index k = 0; k < tr.states.cols(); ++k) {
    x = sample_ou_exact(A, 1.0, x, h, rng);
    tr.states(0, k) = x;
  }
  const auto rho = autocorrelation(tr, 20, 5);
  CHECK(rho[0] == doctest::Approx(1.0));
  CHECK(rho[2] == doctest::Approx(std::exp(-2.0 * 0.1)).epsilon(0.05));
  CHECK(autocorrelation_decay_rate(tr, 20, 5) == doctest::Approx(2.0).epsilon(0.15));
}
