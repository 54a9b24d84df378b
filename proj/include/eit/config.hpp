#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "eit/bayes.hpp"
#include "eit/field.hpp"
#include "eit/mesh.hpp"
#include "eit/simulate.hpp"

namespace eit {

/* One flat key=value file per experiment; every key has a default matching the
   shipped 16-electrode disk setup. Unknown and duplicate keys are rejected and
   all validation failures are reported together. */
struct RunConfig {
  // geometry
  double radius = 14.0;
  int electrodes = 16;
  double electrode_width = 2.8;
  double contact_impedance = 0.005;
  // log-conductivity basis
  double theta = 2.0;
  int dimension = 20;
  double amplitude = 5.0;
  // measurement noise
  double gamma0 = 0.014;
  std::uint64_t noise_seed = 101;
  // meshes: fine for simulation, coarse for inversion
  double fine_h = 0.748;
  double coarse_h = 1.496;
  // ground truth
  std::string truth = "parametric";  // parametric | inclusion
  std::uint64_t truth_seed = 42;
  double inclusion_center_x = -4.0;
  double inclusion_center_y = -5.0;
  double inclusion_radius = 3.0;
  double inclusion_contrast = 0.2;
  // sampling
  std::int64_t n = 16384;
  int shifts = 16;
  std::uint64_t shift_seed = 7;
  std::uint64_t mc_seed = 11;
  std::string generating_vector = "embedded";  // embedded | path to a vector file
  // posterior evaluation grid
  int grid = 128;
  // weight parameters for the generating-vector search
  double sigma = 1.0;
  double p = 0.55;
  double epsilon = 0.05;
  double beta_scale = 1.0;
  // convergence study
  std::string method = "both";  // qmc | mc | both
  int level_min = 10;
  int level_max = 14;
  // measurement file consumed by invert / converge
  std::string data;

  bool operator==(const RunConfig&) const = default;
};

/* Parses and validates; throws ConfigError with one line per problem. */
RunConfig parse_config_text(std::istream& is);
/* As above, from a file; additionally requires referenced files to exist. */
RunConfig parse_config(const std::string& path);
/* Canonical form: every key once, fixed order, %.17g numbers. Round-trips. */
void write_config(const RunConfig& config, std::ostream& os);

/* Views of the config as the module-level inputs. */
ElectrodeConfig electrodes_from(const RunConfig& config);
BasisSpec basis_from(const RunConfig& config);
GroundTruth truth_from(const RunConfig& config);
NoiseModel noise_from(const RunConfig& config);
GridSpec grid_from(const RunConfig& config);
/* Embedded default or the file named by generating_vector. */
std::vector<std::uint32_t> generating_from(const RunConfig& config);

}  // namespace eit
