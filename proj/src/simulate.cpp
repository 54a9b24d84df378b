#include "eit/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_truth(const GroundTruth& truth, const BasisSpec& basis) {
  if (truth.kind == TruthKind::inclusion) {
    if (!(truth.inclusion_radius > 0.0)) throw ConfigError("inclusion radius must be positive");
    if (!(truth.contrast > -1.0))
      throw ConfigError("inclusion contrast must exceed -1 to keep the conductivity positive");
    const double c = std::hypot(truth.center.x, truth.center.y);
    if (c + truth.inclusion_radius > basis.radius)
      throw ConfigError("inclusion does not fit inside the domain disk");
  }
}

}  // namespace

std::function<double(Vec2)> truth_conductivity(const GroundTruth& truth, const BasisSpec& basis) {
  check_truth(truth, basis);
  if (truth.kind == TruthKind::parametric) {
    const FieldParams params = random_params(basis, truth.seed);
    return [basis, params](Vec2 x) {
      return eval_field(basis, {params.y.data(), static_cast<std::size_t>(params.y.size())}, x);
    };
  }
  const Vec2 c = truth.center;
  const double r2 = truth.inclusion_radius * truth.inclusion_radius;
  const double contrast = truth.contrast;
  return [c, r2, contrast](Vec2 x) {
    const double dx = x.x - c.x;
    const double dy = x.y - c.y;
    return dx * dx + dy * dy <= r2 ? 1.0 + contrast : 1.0;
  };
}

Eigen::VectorXd truth_field_on_grid(const GroundTruth& truth, const BasisSpec& basis,
                                    const Grid& grid) {
  const auto a = truth_conductivity(truth, basis);
  Eigen::VectorXd out(grid.size());
  for (int g = 0; g < grid.size(); ++g) out[g] = a(grid.points[static_cast<std::size_t>(g)]);
  return out;
}

MeasurementSet simulate_measurements(const GroundTruth& truth, const BasisSpec& basis,
                                     double fine_h, double inversion_h,
                                     const ElectrodeConfig& electrodes,
                                     std::span<const CurrentPattern> patterns,
                                     const NoiseModel& noise) {
  if (!(fine_h > 0.0)) throw ConfigError("simulation mesh width must be positive");
  if (!(inversion_h > 0.0)) throw ConfigError("inversion mesh width must be positive");
  if (!(noise.gamma0 >= 0.0)) throw ConfigError("noise covariance scale must be nonnegative");
  if (patterns.empty()) throw ConfigError("at least one current pattern is required");
  check_truth(truth, basis);

  const Mesh mesh = build_disk_mesh(basis.radius, fine_h, electrodes);
  const auto a = truth_conductivity(truth, basis);
  const AssembledSystem sys = assemble_system(mesh, a, electrodes);
  Eigen::MatrixXd voltages = observation_operator(sys, patterns);

  const int m = electrodes.count;
  const double sd = std::sqrt(noise.gamma0);
  for (int p = 0; p < static_cast<int>(patterns.size()); ++p)
    for (int e = 0; e < m; ++e)
      voltages(e, p) += sd * standard_normal(noise.seed,
                                             static_cast<std::uint64_t>(p) * m +
                                                 static_cast<std::uint64_t>(e));

  MeasurementSet data;
  data.voltages = voltages;
  data.patterns.assign(patterns.begin(), patterns.end());
  data.gamma = noise.gamma0 * Eigen::MatrixXd::Identity(m, m);
  data.electrodes = electrodes;

  data.metadata["radius"] = format_double(basis.radius);
  data.metadata["electrodes"] = std::to_string(m);
  data.metadata["electrode_width"] = format_double(electrodes.width);
  data.metadata["contact_impedance"] = format_double(electrodes.contact_impedance.minCoeff());
  data.metadata["patterns"] = std::to_string(patterns.size());
  data.metadata["gamma0"] = format_double(noise.gamma0);
  data.metadata["noise_seed"] = std::to_string(noise.seed);
  data.metadata["fine_h"] = format_double(fine_h);
  data.metadata["fine_mesh_width"] = format_double(mesh.mesh_width);
  data.metadata["inversion_h"] = format_double(inversion_h);
  if (truth.kind == TruthKind::parametric) {
    data.metadata["truth_kind"] = "parametric";
    data.metadata["truth_seed"] = std::to_string(truth.seed);
    const FieldParams params = random_params(basis, truth.seed);
    std::string ys;
    for (Eigen::Index j = 0; j < params.y.size(); ++j) {
      if (j) ys += ',';
      ys += format_double(params.y[j]);
    }
    data.metadata["truth_y"] = ys;
    data.metadata["truth_theta"] = format_double(basis.theta);
    data.metadata["truth_dimension"] = std::to_string(basis.dimension);
    data.metadata["truth_amplitude"] = format_double(basis.amplitude);
  } else {
    data.metadata["truth_kind"] = "inclusion";
    data.metadata["inclusion_center_x"] = format_double(truth.center.x);
    data.metadata["inclusion_center_y"] = format_double(truth.center.y);
    data.metadata["inclusion_radius"] = format_double(truth.inclusion_radius);
    data.metadata["inclusion_contrast"] = format_double(truth.contrast);
  }
  if (!(fine_h * 1.5 <= inversion_h))
    data.metadata["warning"] =
        "inversion mesh width is less than 1.5x the simulation mesh width; reconstructions may "
        "look overly sharp (inverse crime)";
  return data;
}

}  // namespace eit
