#include <cmath>
#include <sstream>

#include "doctest.h"
#include "eit/bayes.hpp"
#include "eit/errors.hpp"
#include "eit/fem.hpp"
#include "eit/field.hpp"
#include "eit/io.hpp"
#include "eit/mesh.hpp"
#include "eit/numeric.hpp"
#include "eit/simulate.hpp"

using namespace eit;

namespace {

const ElectrodeConfig kElectrodes = uniform_electrodes(16, 2.8, 0.005);

BasisSpec spec_of(int dimension, double theta = 2.0) {
  BasisSpec spec;
  spec.dimension = dimension;
  spec.theta = theta;
  return spec;
}

}  // namespace

TEST_CASE("parametric truth stays within the prior bounds") {
  const BasisSpec spec = spec_of(20);
  GroundTruth truth;
  truth.kind = TruthKind::parametric;
  truth.seed = 42;
  const auto a = truth_conductivity(truth, spec);
  const FieldBounds bounds = field_bounds(spec);
  for (double x = -13.0; x <= 13.0; x += 2.6)
    for (double y = -13.0; y <= 13.0; y += 2.6) {
      if (std::hypot(x, y) > 14.0) continue;
      const double v = a({x, y});
      CHECK(v >= bounds.a_min);
      CHECK(v <= bounds.a_max);
    }
}

TEST_CASE("inclusion truth is a two-level indicator") {
  const BasisSpec spec = spec_of(20);
  GroundTruth truth;
  truth.kind = TruthKind::inclusion;
  const auto a = truth_conductivity(truth, spec);
  // center (-4,-5), radius 3, contrast 0.2
  CHECK(a({-4.0, -5.0}) == 1.2);
  CHECK(a({-4.0, -2.0}) == 1.2);   // on the closed boundary
  CHECK(a({-4.0, -1.99}) == 1.0);  // just outside
  CHECK(a({10.0, 3.0}) == 1.0);

  const Grid grid = make_grid({16, 14.0});
  const Eigen::VectorXd field = truth_field_on_grid(truth, spec, grid);
  for (int g = 0; g < grid.size(); ++g) {
    const Vec2 x = grid.points[std::size_t(g)];
    const double dx = x.x + 4.0, dy = x.y + 5.0;
    CHECK(field[g] == (dx * dx + dy * dy <= 9.0 ? 1.2 : 1.0));
  }
}

TEST_CASE("inclusions must fit inside the domain") {
  const BasisSpec spec = spec_of(4);
  GroundTruth truth;
  truth.kind = TruthKind::inclusion;
  truth.center = {-12.0, -5.0};  // |c| + r = 16 > 14
  CHECK_THROWS_AS(truth_conductivity(truth, spec), ConfigError);

  truth.center = {-4.0, -5.0};
  truth.inclusion_radius = -1.0;
  CHECK_THROWS_AS(truth_conductivity(truth, spec), ConfigError);
}

TEST_CASE("noiseless simulation equals the fine-mesh forward solve") {
  const BasisSpec spec = spec_of(6);
  GroundTruth truth;
  truth.kind = TruthKind::parametric;
  truth.seed = 5;
  NoiseModel noise;
  noise.gamma0 = 0.0;
  const auto patterns = reference_patterns(16);
  const MeasurementSet data =
      simulate_measurements(truth, spec, 1.5, 3.0, kElectrodes, patterns, noise);

  const Mesh fine = build_disk_mesh(14.0, 1.5, kElectrodes);
  const AssembledSystem sys = assemble_system(fine, truth_conductivity(truth, spec), kElectrodes);
  const Eigen::MatrixXd expected = observation_operator(sys, patterns);
  CHECK((data.voltages - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise draws are exactly the advertised gaussian stream") {
  const BasisSpec spec = spec_of(6);
  GroundTruth truth;
  truth.kind = TruthKind::inclusion;
  const auto patterns = reference_patterns(16);

  NoiseModel clean;
  clean.gamma0 = 0.0;
  NoiseModel noisy;
  noisy.gamma0 = 0.014;
  noisy.seed = 101;
  const MeasurementSet a =
      simulate_measurements(truth, spec, 1.5, 3.0, kElectrodes, patterns, clean);
  const MeasurementSet b =
      simulate_measurements(truth, spec, 1.5, 3.0, kElectrodes, patterns, noisy);

  const double sd = std::sqrt(0.014);
  for (int p = 0; p < 15; ++p)
    for (int e = 0; e < 16; ++e) {
      const double draw = standard_normal(101, std::uint64_t(p) * 16 + std::uint64_t(e));
      CHECK(b.voltages(e, p) - a.voltages(e, p) == doctest::Approx(sd * draw).epsilon(1e-12));
    }
  CHECK((b.gamma - 0.014 * Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_NOTHROW(validate_measurements(b));
}

TEST_CASE("simulation is reproducible and documents its provenance") {
  const BasisSpec spec = spec_of(8);
  GroundTruth truth;
  truth.kind = TruthKind::parametric;
  truth.seed = 9;
  NoiseModel noise;
  noise.gamma0 = 0.014;
  const auto patterns = reference_patterns(16);

  const MeasurementSet a =
      simulate_measurements(truth, spec, 1.5, 3.0, kElectrodes, patterns, noise);
  const MeasurementSet b =
      simulate_measurements(truth, spec, 1.5, 3.0, kElectrodes, patterns, noise);
  CHECK((a.voltages - b.voltages).cwiseAbs().maxCoeff() == 0.0);

  CHECK(a.metadata.count("truth_kind") == 1);
  CHECK(a.metadata.at("truth_kind") == "parametric");
  CHECK(a.metadata.count("truth_seed") == 1);
  CHECK(a.metadata.count("fine_h") == 1);
  CHECK(a.metadata.count("inversion_h") == 1);
  CHECK(a.metadata.count("gamma0") == 1);
  CHECK(a.metadata.count("warning") == 0);  // 1.5 * 1.5 = 2.25 <= 3.0: meshes are distinct

  // too-similar meshes are flagged but not rejected
  const MeasurementSet crime =
      simulate_measurements(truth, spec, 1.5, 1.5, kElectrodes, patterns, noise);
  CHECK(crime.metadata.count("warning") == 1);
}

TEST_CASE("measurements survive a text round trip") {
  const BasisSpec spec = spec_of(6);
  GroundTruth truth;
  truth.kind = TruthKind::inclusion;
  NoiseModel noise;
  noise.gamma0 = 0.014;
  const auto patterns = reference_patterns(16);
  const MeasurementSet data =
      simulate_measurements(truth, spec, 1.5, 3.0, kElectrodes, patterns, noise);

  std::stringstream ss;
  write_measurements(data, ss);
  const MeasurementSet back = read_measurements(ss);
  CHECK((back.voltages - data.voltages).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.gamma - data.gamma).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.patterns.size() == data.patterns.size());
  for (std::size_t p = 0; p < data.patterns.size(); ++p)
    CHECK((back.patterns[p].values - data.patterns[p].values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.electrodes == data.electrodes);
  CHECK(back.metadata == data.metadata);
}
