#include "eit/harness.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

double rms_error(const Eigen::MatrixXd& per_shift) {
  const Eigen::Index r = per_shift.rows();
  if (r < 2) throw std::invalid_argument("rms over shifts needs at least two shifts");
  if (per_shift.cols() < 1) throw std::invalid_argument("per-shift fields are empty");
  const Eigen::RowVectorXd mean = per_shift.colwise().mean();
  KahanSum sum;
  for (Eigen::Index i = 0; i < r; ++i) {
    const double d = (per_shift.row(i) - mean).cwiseAbs().maxCoeff();
    sum.add(d * d);
  }
  return std::sqrt(sum.value() / (static_cast<double>(r) * static_cast<double>(r - 1)));
}

RateFit rate_fit(std::span<const double> n_values, std::span<const double> rms_values) {
  if (n_values.size() != rms_values.size())
    throw std::invalid_argument("point-count and rms lists differ in length");
  if (n_values.size() < 2) throw std::invalid_argument("rate fit needs at least two points");
  std::set<double> distinct(n_values.begin(), n_values.end());
  if (distinct.size() < 2)
    throw std::invalid_argument("rate fit needs at least two distinct point counts");
  const std::size_t m = n_values.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(n_values[i] > 0.0)) throw std::invalid_argument("point counts must be positive");
    if (!(rms_values[i] > 0.0))
      throw std::invalid_argument("rms values must be positive for the log-log fit");
    const double x = std::log2(n_values[i]);
    const double y = std::log2(rms_values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double md = static_cast<double>(m);
  const double denom = md * sxx - sx * sx;
  RateFit fit;
  fit.rate = (md * sxy - sx * sy) / denom;
  fit.constant = std::exp2((sy - fit.rate * sx) / md);
  return fit;
}

ConvergenceStudy run_convergence(const StudyPlan& plan, const MeasurementSet& data,
                                 const BasisSpec& basis, const Mesh& mesh, const Grid& grid,
                                 const EstimatorOptions& options) {
  if (plan.point_counts.empty()) throw ConfigError("convergence study has no levels");
  if (plan.replications < 2)
    throw ConfigError("convergence study needs at least two shifts / trials");
  const int s = basis.dimension;

  ConvergenceStudy study;
  study.method = plan.use_qmc ? "qmc" : "mc";

  ShiftSet shifts;
  if (plan.use_qmc) shifts = make_shifts(plan.replications, s, plan.shift_seed);

  EstimatorOptions opts = options;
  opts.threads = plan.threads;

  bool all_positive = true;
  for (const std::int64_t n : plan.point_counts) {
    SamplingPlan sampling;
    if (plan.use_qmc) {
      const std::span<const std::uint32_t> gen =
          plan.generating.empty() ? default_generating_vector()
                                  : std::span<const std::uint32_t>(plan.generating);
      sampling = QmcPlan{make_lattice(n, gen, s), shifts};
    } else {
      sampling = McPlan{n, plan.replications,
                        derive_seed(plan.mc_seed, static_cast<std::uint64_t>(n))};
    }
    const auto start = std::chrono::steady_clock::now();
    const PosteriorEstimate estimate = ratio_estimate(sampling, data, basis, mesh, grid, opts);
    const auto stop = std::chrono::steady_clock::now();

    StudyLevel level;
    level.n = n;
    try {
      level.rms = rms_error(estimate.per_shift);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("level n=") + std::to_string(n) + ": " + e.what());
    }
    level.seconds = std::chrono::duration<double>(stop - start).count();
    if (!(level.rms > 0.0)) all_positive = false;
    study.levels.push_back(level);
  }

  if (study.levels.size() >= 2 && all_positive) {
    std::vector<double> ns, rms;
    for (const StudyLevel& level : study.levels) {
      ns.push_back(static_cast<double>(level.n));
      rms.push_back(level.rms);
    }
    study.fit = rate_fit(ns, rms);
  }
  return study;
}

}  // namespace eit
