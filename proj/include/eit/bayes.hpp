#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "eit/fem.hpp"
#include "eit/field.hpp"
#include "eit/lattice.hpp"
#include "eit/mesh.hpp"

namespace eit {

/* Noisy electrode voltages for a set of driving patterns, with the Gaussian
   noise covariance and the electrode layout they were recorded with. */
struct MeasurementSet {
  Eigen::MatrixXd voltages;              // M x P
  std::vector<CurrentPattern> patterns;  // P patterns, one per column
  Eigen::MatrixXd gamma;                 // M x M symmetric positive definite
  ElectrodeConfig electrodes;
  std::map<std::string, std::string> metadata;  // provenance echoed into outputs
};

/* Shape and positivity checks; throws ConfigError. */
void validate_measurements(const MeasurementSet& data);
/* Smallest eigenvalue of the noise covariance (> 0 for valid data). */
double noise_min_eigenvalue(const MeasurementSet& data);

/* Precomputed Cholesky factor of the covariance; evaluation is thread-safe. */
class LikelihoodEvaluator {
 public:
  explicit LikelihoodEvaluator(const MeasurementSet& data);

  /* -1/2 sum_p (delta_p - v_p)' Gamma^{-1} (delta_p - v_p) for the voltage
     matrix v; patterns are treated as independent measurements. */
  double operator()(const Eigen::MatrixXd& voltages) const;
  double min_eigenvalue() const { return mu_min_; }

 private:
  Eigen::MatrixXd delta_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double mu_min_ = 0.0;
};

using ForwardOperator = std::function<Eigen::MatrixXd(const FieldParams&)>;
double log_likelihood(const FieldParams& y, const MeasurementSet& data,
                      const ForwardOperator& forward);

/* Regular Cartesian grid of cell centers clipped to the closed disk. */
struct GridSpec {
  int resolution = 128;
  double radius = 14.0;
};
struct Grid {
  std::vector<Vec2> points;     // kept cell centers, x fastest then y upward
  std::vector<int> cell_index;  // resolution^2 entries, -1 where outside the disk
  int resolution = 0;
  double radius = 0.0;

  int size() const { return static_cast<int>(points.size()); }
};
Grid make_grid(const GridSpec& spec);

struct EstimatorOptions {
  /* Replace the likelihood by a constant: the estimate reduces to the prior
     mean of the conductivity and no forward solves run. */
  bool flat_likelihood = false;
  /* Constant added to every log-likelihood. The self-normalized ratio is
     invariant to it: the running-max stabilization cancels it identically, so
     it never enters the arithmetic. Kept as a switch to document and test that
     invariance. */
  double likelihood_log_scale = 0.0;
  int threads = 0;
};

struct PosteriorEstimate {
  Grid grid;
  Eigen::VectorXd mean;       // posterior-mean conductivity per grid point
  Eigen::VectorXd variance;   // self-normalized posterior variance, >= 0
  Eigen::VectorXd margin;     // 4.47214 * sqrt(variance)
  Eigen::MatrixXd per_shift;  // R x G, one self-normalized field per shift
  Eigen::VectorXd log_normalizer;     // per shift: log of the mean likelihood
  Eigen::VectorXd effective_samples;  // per shift: (sum w)^2 / sum w^2
  std::int64_t variance_clamped = 0;  // points where the variance was clipped at 0
  FieldBounds prior_bounds;           // the mean lies inside these bounds
};

/* Self-normalized posterior-mean estimate: one forward solve per node reused
   for every grid point, likelihood weights stabilized by the running maximum
   per shift, per-shift ratios averaged. Node sweeps run concurrently; partial
   sums merge in a fixed chunk order, so results are thread-count independent. */
PosteriorEstimate ratio_estimate(const SamplingPlan& plan, const MeasurementSet& data,
                                 const BasisSpec& basis, const Mesh& mesh, const Grid& grid,
                                 const EstimatorOptions& options = {});

/* Pointwise conservative 95% half-width: 4.47214 * sqrt(variance). */
Eigen::VectorXd credible_margin(const Eigen::VectorXd& variance);

}  // namespace eit
