#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eit/bayes.hpp"

namespace eit {

/* sqrt( 1/(R(R-1)) * sum_r || mean - field_r ||_inf^2 ) over the grid, the
   spread of the per-shift ratio fields around their average. Rows of
   per_shift are the fields; R >= 2 required. */
double rms_error(const Eigen::MatrixXd& per_shift);

/* Least-squares fit rms ~ constant * n^rate on log2-log2 axes. */
struct RateFit {
  double rate = 0.0;
  double constant = 0.0;
};
RateFit rate_fit(std::span<const double> n_values, std::span<const double> rms_values);

struct StudyLevel {
  std::int64_t n = 0;
  double rms = 0.0;
  double seconds = 0.0;
};

struct ConvergenceStudy {
  std::string method;  // "qmc" or "mc"
  std::vector<StudyLevel> levels;
  std::optional<RateFit> fit;  // absent when some rms vanished (log undefined)
};

/* One estimator sweep per point count. The random shifts are drawn once and
   reused at every level; Monte Carlo replications derive their seeds from
   (mc_seed, n). */
struct StudyPlan {
  bool use_qmc = true;
  std::vector<std::int64_t> point_counts;  // powers of two
  int replications = 16;
  std::uint64_t shift_seed = 7;
  std::uint64_t mc_seed = 11;
  std::vector<std::uint32_t> generating;  // rank-1 components, >= field dimension; empty = embedded default
  int threads = 0;
};

ConvergenceStudy run_convergence(const StudyPlan& plan, const MeasurementSet& data,
                                 const BasisSpec& basis, const Mesh& mesh, const Grid& grid,
                                 const EstimatorOptions& options = {});

}  // namespace eit
