#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "eit/bayes.hpp"
#include "eit/fem.hpp"
#include "eit/field.hpp"
#include "eit/mesh.hpp"

namespace eit {

enum class TruthKind { parametric, inclusion };

/* Target conductivity: either a seeded draw from the parametric prior or a
   circular inclusion 1 + contrast inside the ball around center. */
struct GroundTruth {
  TruthKind kind = TruthKind::parametric;
  std::uint64_t seed = 42;      // parametric draw
  Vec2 center{-4.0, -5.0};      // inclusion
  double inclusion_radius = 3.0;
  double contrast = 0.2;        // must stay > -1
};

/* Pointwise evaluator of the target conductivity on the closed disk. */
std::function<double(Vec2)> truth_conductivity(const GroundTruth& truth, const BasisSpec& basis);

/* Target conductivity sampled at the grid points (for images and error reports). */
Eigen::VectorXd truth_field_on_grid(const GroundTruth& truth, const BasisSpec& basis,
                                    const Grid& grid);

/* Additive i.i.d. Gaussian measurement noise, covariance gamma0 * identity.
   gamma0 == 0 produces exact noiseless data (useful for oracles; such a set
   cannot be inverted because the covariance is singular). */
struct NoiseModel {
  double gamma0 = 0.014;
  std::uint64_t seed = 101;
};

/* Solves the forward model on a fresh fine mesh for every pattern and adds
   seeded noise. inversion_h is the mesh width intended for the later
   inversion; if it is not coarser than fine_h by at least 1.5x, a warning is
   recorded in the metadata (committing both steps to one mesh makes the
   reconstruction look better than it is). */
MeasurementSet simulate_measurements(const GroundTruth& truth, const BasisSpec& basis,
                                     double fine_h, double inversion_h,
                                     const ElectrodeConfig& electrodes,
                                     std::span<const CurrentPattern> patterns,
                                     const NoiseModel& noise);

}  // namespace eit
