#include <cmath>
#include <vector>

#include "doctest.h"
#include "eit/bayes.hpp"
#include "eit/errors.hpp"
#include "eit/fem.hpp"
#include "eit/field.hpp"
#include "eit/lattice.hpp"
#include "eit/mesh.hpp"

using namespace eit;

namespace {

const ElectrodeConfig kElectrodes = uniform_electrodes(16, 2.8, 0.005);

MeasurementSet synthetic_data(double gamma0 = 0.014) {
  MeasurementSet data;
  data.electrodes = kElectrodes;
  data.patterns = reference_patterns(16);
  data.voltages = Eigen::MatrixXd::Zero(16, 15);
  for (int p = 0; p < 15; ++p)
    for (int m = 0; m < 16; ++m) data.voltages(m, p) = 0.01 * std::sin(0.7 * m + 1.3 * p);
  data.gamma = gamma0 * Eigen::MatrixXd::Identity(16, 16);
  return data;
}

BasisSpec spec_of(int dimension) {
  BasisSpec spec;
  spec.dimension = dimension;
  return spec;
}

}  // namespace

TEST_CASE("grid keeps exactly the cells inside the disk") {
  const Grid grid = make_grid({4, 1.0});
  REQUIRE(grid.resolution == 4);
  CHECK(grid.size() == 12);  // the four corner cells fall outside
  REQUIRE(grid.cell_index.size() == 16);

  int kept = 0;
  for (int iy = 0; iy < 4; ++iy)
    for (int ix = 0; ix < 4; ++ix) {
      const int idx = grid.cell_index[std::size_t(iy * 4 + ix)];
      const double cx = -1.0 + (ix + 0.5) * 0.5;
      const double cy = -1.0 + (iy + 0.5) * 0.5;
      if (cx * cx + cy * cy <= 1.0) {
        REQUIRE(idx == kept);
        CHECK(grid.points[std::size_t(idx)].x == doctest::Approx(cx).epsilon(1e-15));
        CHECK(grid.points[std::size_t(idx)].y == doctest::Approx(cy).epsilon(1e-15));
        ++kept;
      } else {
        CHECK(idx == -1);
      }
    }
  CHECK(kept == grid.size());

  CHECK_THROWS_AS(make_grid({0, 1.0}), ConfigError);
}

TEST_CASE("log likelihood matches the quadratic form oracle") {
  MeasurementSet data = synthetic_data();
  const LikelihoodEvaluator like(data);
  CHECK(like.min_eigenvalue() == doctest::Approx(0.014).epsilon(1e-12));

  Eigen::MatrixXd shifted = data.voltages;
  shifted(0, 0) += 0.1;
  shifted(1, 0) -= 0.1;
  // -(0.1^2 + 0.1^2) / (2 * 0.014) = -5/7
  CHECK(like(shifted) == doctest::Approx(-5.0 / 7.0).epsilon(1e-12));
  CHECK(like(data.voltages) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("measurement validation rejects inconsistent inputs") {
  MeasurementSet ok = synthetic_data();
  CHECK_NOTHROW(validate_measurements(ok));
  CHECK(noise_min_eigenvalue(ok) == doctest::Approx(0.014).epsilon(1e-12));

  MeasurementSet bad = ok;
  bad.gamma = Eigen::MatrixXd::Identity(15, 15);
  CHECK_THROWS_AS(validate_measurements(bad), ConfigError);

  bad = ok;
  bad.gamma(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(validate_measurements(bad), ConfigError);

  bad = ok;
  bad.gamma = -0.01 * Eigen::MatrixXd::Identity(16, 16);
  CHECK_THROWS_AS(validate_measurements(bad), ConfigError);

  bad = ok;
  bad.patterns.pop_back();
  CHECK_THROWS_AS(validate_measurements(bad), ConfigError);
}

TEST_CASE("credible margin is the fixed multiple of the standard deviation") {
  Eigen::VectorXd var(3);
  var << 0.04, 0.0, 1.0;
  const Eigen::VectorXd margin = credible_margin(var);
  CHECK(margin[0] == doctest::Approx(4.47214 * 0.2).epsilon(1e-15));
  CHECK(margin[1] == 0.0);
  CHECK(margin[2] == doctest::Approx(4.47214).epsilon(1e-15));

  Eigen::VectorXd bad(1);
  bad << -1e-9;
  CHECK_THROWS_AS(credible_margin(bad), std::invalid_argument);
}

TEST_CASE("flat-likelihood estimate reduces to the prior mean with closed-form variance") {
  const BasisSpec spec = spec_of(1);
  const MeasurementSet data = synthetic_data();
  const Mesh mesh = build_disk_mesh(14.0, 3.0, kElectrodes);
  const Grid grid = make_grid({8, 14.0});

  EstimatorOptions options;
  options.flat_likelihood = true;
  const SamplingPlan plan =
      QmcPlan{default_lattice(16384, 1), make_shifts(8, 1, 7)};
  const PosteriorEstimate est = ratio_estimate(plan, data, spec, mesh, grid, options);

  REQUIRE(est.mean.size() == grid.size());
  for (int g = 0; g < grid.size(); ++g) {
    const Vec2 x = grid.points[std::size_t(g)];
    const double psi = 1.25 * std::sin(M_PI * x.x / 14.0) * std::sin(M_PI * x.y / 14.0);
    double mean_exact = 1.0, second_exact = 1.0;
    if (psi != 0.0) {
      mean_exact = 2.0 * std::sinh(psi / 2.0) / psi;
      second_exact = std::sinh(psi) / psi;
    }
    const double var_exact = second_exact - mean_exact * mean_exact;
    // The integrand is not periodized, so each shifted rule carries an O(1/n)
    // boundary term; pooling 8 shifts at n = 16384 leaves ~1e-5 relative
    // integration error, which bounds how tightly the closed form can match.
    CHECK(est.mean[g] == doctest::Approx(mean_exact).epsilon(1e-4));
    CHECK(std::abs(est.variance[g] - var_exact) <= 5e-5);
  }

  // margins are exactly the advertised function of the variance
  const Eigen::VectorXd margin = credible_margin(est.variance);
  CHECK((est.margin - margin).cwiseAbs().maxCoeff() == 0.0);

  // per-shift fields pool into the reported mean
  const Eigen::VectorXd pooled = est.per_shift.colwise().mean();
  CHECK((est.mean - pooled).cwiseAbs().maxCoeff() <= 1e-14);

  // flat weights: every node contributes equally
  for (int r = 0; r < est.effective_samples.size(); ++r)
    CHECK(est.effective_samples[r] == doctest::Approx(16384.0).epsilon(1e-12));

  // the estimate respects the prior bounds
  CHECK(est.prior_bounds.a_min > 0.0);
  CHECK(est.mean.minCoeff() >= est.prior_bounds.a_min);
  CHECK(est.mean.maxCoeff() <= est.prior_bounds.a_max);
}

TEST_CASE("posterior estimation is deterministic and thread-count independent") {
  const BasisSpec spec = spec_of(6);
  MeasurementSet data = synthetic_data(0.05);
  const Mesh mesh = build_disk_mesh(14.0, 3.0, kElectrodes);
  const Grid grid = make_grid({8, 14.0});

  const SamplingPlan plan = QmcPlan{default_lattice(256, 6), make_shifts(4, 6, 3)};
  EstimatorOptions serial;
  serial.threads = 1;
  EstimatorOptions parallel;
  parallel.threads = 4;
  const PosteriorEstimate a = ratio_estimate(plan, data, spec, mesh, grid, serial);
  const PosteriorEstimate b = ratio_estimate(plan, data, spec, mesh, grid, parallel);
  CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.per_shift - b.per_shift).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.log_normalizer - b.log_normalizer).cwiseAbs().maxCoeff() == 0.0);

  // adding a constant to every log likelihood cannot change the ratio
  EstimatorOptions scaled = serial;
  scaled.likelihood_log_scale = 123.75;
  const PosteriorEstimate c = ratio_estimate(plan, data, spec, mesh, grid, scaled);
  CHECK((a.mean - c.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.variance - c.variance).cwiseAbs().maxCoeff() == 0.0);

  // basic health of the weighted estimate
  for (int r = 0; r < a.effective_samples.size(); ++r) {
    CHECK(a.effective_samples[r] > 0.0);
    CHECK(a.effective_samples[r] <= 256.0 * (1.0 + 1e-12));
    CHECK(std::isfinite(a.log_normalizer[r]));
  }
  CHECK(a.mean.minCoeff() >= a.prior_bounds.a_min);
  CHECK(a.mean.maxCoeff() <= a.prior_bounds.a_max);
}

TEST_CASE("monte carlo plan drives the same estimator") {
  const BasisSpec spec = spec_of(4);
  MeasurementSet data = synthetic_data(0.05);
  const Mesh mesh = build_disk_mesh(14.0, 3.0, kElectrodes);
  const Grid grid = make_grid({6, 14.0});

  const SamplingPlan plan = McPlan{128, 3, 77};
  const PosteriorEstimate est = ratio_estimate(plan, data, spec, mesh, grid);
  CHECK(est.per_shift.rows() == 3);
  CHECK(est.mean.minCoeff() >= est.prior_bounds.a_min);
  CHECK(est.mean.maxCoeff() <= est.prior_bounds.a_max);
  CHECK(est.variance.minCoeff() >= 0.0);

  const PosteriorEstimate again = ratio_estimate(plan, data, spec, mesh, grid);
  CHECK((est.mean - again.mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("plan dimension must match the basis dimension") {
  const BasisSpec spec = spec_of(6);
  MeasurementSet data = synthetic_data();
  const Mesh mesh = build_disk_mesh(14.0, 3.0, kElectrodes);
  const Grid grid = make_grid({6, 14.0});
  const SamplingPlan plan = QmcPlan{default_lattice(64, 4), make_shifts(2, 4, 1)};
  CHECK_THROWS_AS(ratio_estimate(plan, data, spec, mesh, grid), ConfigError);
}
