#include "eit/bayes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

namespace {

constexpr double kMarginFactor = 4.47214;
constexpr std::int64_t kNodesPerChunk = 64;
constexpr std::int64_t kChunksPerBlock = 128;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void validate_measurements(const MeasurementSet& data) {
  const int m = data.electrodes.count;
  if (m < 2) throw ConfigError("measurements need at least two electrodes");
  if (data.voltages.rows() != m)
    throw ConfigError("voltage rows do not match the electrode count");
  if (static_cast<int>(data.patterns.size()) != data.voltages.cols())
    throw ConfigError("pattern count does not match the voltage columns");
  if (data.patterns.empty()) throw ConfigError("measurements contain no patterns");
  for (const CurrentPattern& p : data.patterns)
    if (p.values.size() != m) throw ConfigError("pattern size does not match the electrode count");
  if (data.gamma.rows() != m || data.gamma.cols() != m)
    throw ConfigError("noise covariance must be square with one row per electrode");
  const double asym = (data.gamma - data.gamma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + data.gamma.cwiseAbs().maxCoeff()))
    throw ConfigError("noise covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(data.gamma);
  if (llt.info() != Eigen::Success)
    throw ConfigError("noise covariance is not positive definite");
}

double noise_min_eigenvalue(const MeasurementSet& data) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data.gamma, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

LikelihoodEvaluator::LikelihoodEvaluator(const MeasurementSet& data) {
  validate_measurements(data);
  delta_ = data.voltages;
  llt_.compute(data.gamma);
  if (llt_.info() != Eigen::Success)
    throw ConfigError("noise covariance is not positive definite");
  mu_min_ = noise_min_eigenvalue(data);
  if (!(mu_min_ > 0.0)) throw ConfigError("noise covariance is not positive definite");
}

double LikelihoodEvaluator::operator()(const Eigen::MatrixXd& voltages) const {
  if (voltages.rows() != delta_.rows() || voltages.cols() != delta_.cols())
    throw std::invalid_argument("voltage matrix shape does not match the measurements");
  const Eigen::MatrixXd misfit = delta_ - voltages;
  const Eigen::MatrixXd solved = llt_.solve(misfit);
  return -0.5 * (misfit.array() * solved.array()).sum();
}

double log_likelihood(const FieldParams& y, const MeasurementSet& data,
                      const ForwardOperator& forward) {
  LikelihoodEvaluator like(data);
  return like(forward(y));
}

Grid make_grid(const GridSpec& spec) {
  if (spec.resolution < 1) throw ConfigError("grid resolution must be >= 1");
  if (!(spec.radius > 0.0)) throw ConfigError("grid radius must be positive");
  Grid grid;
  grid.resolution = spec.resolution;
  grid.radius = spec.radius;
  grid.cell_index.assign(static_cast<std::size_t>(spec.resolution) * spec.resolution, -1);
  const double step = 2.0 * spec.radius / spec.resolution;
  const double r2 = spec.radius * spec.radius;
  for (int iy = 0; iy < spec.resolution; ++iy) {
    const double y = -spec.radius + (iy + 0.5) * step;
    for (int ix = 0; ix < spec.resolution; ++ix) {
      const double x = -spec.radius + (ix + 0.5) * step;
      if (x * x + y * y <= r2) {
        grid.cell_index[static_cast<std::size_t>(iy) * spec.resolution + ix] =
            static_cast<int>(grid.points.size());
        grid.points.push_back({x, y});
      }
    }
  }
  if (grid.points.empty()) throw ConfigError("no grid cell centers fall inside the disk");
  return grid;
}

Eigen::VectorXd credible_margin(const Eigen::VectorXd& variance) {
  if ((variance.array() < 0.0).any())
    throw std::invalid_argument("variance field must be nonnegative");
  return kMarginFactor * variance.array().sqrt();
}

PosteriorEstimate ratio_estimate(const SamplingPlan& plan, const MeasurementSet& data,
                                 const BasisSpec& basis, const Mesh& mesh, const Grid& grid,
                                 const EstimatorOptions& options) {
  if (grid.size() < 1) throw ConfigError("evaluation grid is empty");
  if (!std::isfinite(options.likelihood_log_scale))
    throw ConfigError("likelihood log-scale must be finite");
  const int s = basis.dimension;
  const int G = grid.size();

  const QmcPlan* qmc = std::get_if<QmcPlan>(&plan);
  const McPlan* mc = std::get_if<McPlan>(&plan);
  std::int64_t n = 0;
  int reps = 0;
  if (qmc != nullptr) {
    n = qmc->rule.n;
    reps = qmc->shifts.count();
    if (qmc->rule.dimension() != s)
      throw ConfigError("lattice dimension does not match the field dimension");
    if (qmc->shifts.dimension() != s)
      throw ConfigError("shift dimension does not match the field dimension");
  } else {
    n = mc->n;
    reps = mc->replications;
    if (n < 1) throw ConfigError("sample count must be >= 1");
  }
  if (reps < 1) throw ConfigError("need at least one shift / replication");

  std::vector<std::uint64_t> rep_seeds;
  if (mc != nullptr)
    for (int r = 0; r < reps; ++r)
      rep_seeds.push_back(derive_seed(mc->seed, static_cast<std::uint64_t>(r)));

  const FieldEvaluator grid_eval(basis, grid.points);
  const bool flat = options.flat_likelihood;

  std::shared_ptr<const CemSystem> system;
  std::unique_ptr<const FieldEvaluator> cent_eval;
  std::unique_ptr<const LikelihoodEvaluator> like;
  const int workers = resolve_threads(options.threads);
  std::vector<std::unique_ptr<CemSolver>> solvers;
  if (!flat) {
    system = std::make_shared<const CemSystem>(mesh, data.electrodes);
    cent_eval = std::make_unique<const FieldEvaluator>(basis, system->centroids());
    like = std::make_unique<const LikelihoodEvaluator>(data);
    solvers.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) solvers.push_back(std::make_unique<CemSolver>(*system));
  }

  const std::int64_t nchunks = (n + kNodesPerChunk - 1) / kNodesPerChunk;
  const std::int64_t block_slots = std::min(nchunks, kChunksPerBlock);

  struct Slot {
    double lmax = kNegInf;
    double z = 0.0;
    double zsq = 0.0;
    std::vector<double> z1, z2;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(block_slots));
  for (Slot& sl : slots) {
    sl.z1.resize(static_cast<std::size_t>(G));
    sl.z2.resize(static_cast<std::size_t>(G));
  }

  struct Scratch {
    std::vector<double> y, a, cent;
  };
  std::vector<Scratch> scratch(static_cast<std::size_t>(workers));
  for (Scratch& sc : scratch) {
    sc.y.resize(static_cast<std::size_t>(s));
    sc.a.resize(static_cast<std::size_t>(G));
    sc.cent.resize(flat ? 0 : mesh.triangles.size());
  }

  PosteriorEstimate out;
  out.grid = grid;
  out.per_shift.resize(reps, G);
  out.log_normalizer.resize(reps);
  out.effective_samples.resize(reps);
  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(G);
  Eigen::VectorXd m2_acc = Eigen::VectorXd::Zero(G);

  std::mutex err_mutex;
  std::string err_text;
  std::atomic<bool> failed{false};

  for (int r = 0; r < reps; ++r) {
    double lref = kNegInf;
    KahanSum z, zsq;
    std::vector<KahanSum> z1(static_cast<std::size_t>(G)), z2(static_cast<std::size_t>(G));

    for (std::int64_t b0 = 0; b0 < nchunks; b0 += block_slots) {
      const std::int64_t b1 = std::min(nchunks, b0 + block_slots);
      std::atomic<std::int64_t> next{b0};

      auto work = [&](int w) {
        Scratch& sc = scratch[static_cast<std::size_t>(w)];
        for (;;) {
          const std::int64_t c = next.fetch_add(1);
          if (c >= b1 || failed.load(std::memory_order_relaxed)) break;
          Slot& sl = slots[static_cast<std::size_t>(c - b0)];
          sl.lmax = kNegInf;
          sl.z = 0.0;
          sl.zsq = 0.0;
          std::fill(sl.z1.begin(), sl.z1.end(), 0.0);
          std::fill(sl.z2.begin(), sl.z2.end(), 0.0);
          const std::int64_t k0 = c * kNodesPerChunk;
          const std::int64_t k1 = std::min(n, k0 + kNodesPerChunk);
          for (std::int64_t k = k0; k < k1; ++k) {
            try {
              if (qmc != nullptr) {
                shifted_lattice_point(qmc->rule, qmc->shifts, r, k, sc.y);
              } else {
                mc_point(rep_seeds[static_cast<std::size_t>(r)], k, sc.y);
              }
              to_parameter_box(sc.y);
              double l = 0.0;
              if (!flat) {
                cent_eval->eval(sc.y, sc.cent);
                solvers[static_cast<std::size_t>(w)]->factor(sc.cent);
                const Eigen::MatrixXd v =
                    solvers[static_cast<std::size_t>(w)]->observe(data.patterns);
                l = (*like)(v);
              }
              if (!std::isfinite(l)) throw NumericalError("log-likelihood is not finite");
              grid_eval.eval(sc.y, sc.a);
              if (l > sl.lmax) {
                const double f = std::exp(sl.lmax - l);
                sl.z *= f;
                sl.zsq *= f * f;
                for (int g = 0; g < G; ++g) {
                  sl.z1[static_cast<std::size_t>(g)] *= f;
                  sl.z2[static_cast<std::size_t>(g)] *= f;
                }
                sl.lmax = l;
              }
              const double wgt = std::exp(l - sl.lmax);
              sl.z += wgt;
              sl.zsq += wgt * wgt;
              for (int g = 0; g < G; ++g) {
                const double ag = sc.a[static_cast<std::size_t>(g)];
                const double wa = wgt * ag;
                sl.z1[static_cast<std::size_t>(g)] += wa;
                sl.z2[static_cast<std::size_t>(g)] += wa * ag;
              }
            } catch (const std::exception& e) {
              failed.store(true);
              const std::lock_guard<std::mutex> lock(err_mutex);
              if (err_text.empty())
                err_text = "node sweep failed at shift " + std::to_string(r) + ", node " +
                           std::to_string(k) + ": " + e.what();
              return;
            }
          }
        }
      };

      const int spawn = static_cast<int>(std::min<std::int64_t>(workers, b1 - b0));
      if (spawn <= 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(spawn));
        for (int w = 0; w < spawn; ++w) pool.emplace_back(work, w);
        for (std::thread& t : pool) t.join();
      }
      if (failed.load()) throw NumericalError(err_text);

      for (std::int64_t c = b0; c < b1; ++c) {
        const Slot& sl = slots[static_cast<std::size_t>(c - b0)];
        if (sl.lmax > lref) {
          const double f = std::exp(lref - sl.lmax);
          z.scale(f);
          zsq.scale(f * f);
          for (int g = 0; g < G; ++g) {
            z1[static_cast<std::size_t>(g)].scale(f);
            z2[static_cast<std::size_t>(g)].scale(f);
          }
          lref = sl.lmax;
        }
        const double f = std::exp(sl.lmax - lref);
        z.add(f * sl.z);
        zsq.add(f * f * sl.zsq);
        for (int g = 0; g < G; ++g) {
          z1[static_cast<std::size_t>(g)].add(f * sl.z1[static_cast<std::size_t>(g)]);
          z2[static_cast<std::size_t>(g)].add(f * sl.z2[static_cast<std::size_t>(g)]);
        }
      }
    }

    const double zs = z.value();
    if (!(zs > 0.0) || !std::isfinite(zs))
      throw NumericalError("stabilized likelihood weights vanished at shift " + std::to_string(r) +
                           "; this indicates an arithmetic fault");
    for (int g = 0; g < G; ++g) {
      const double m1 = z1[static_cast<std::size_t>(g)].value() / zs;
      out.per_shift(r, g) = m1;
      mean_acc[g] += m1;
      m2_acc[g] += z2[static_cast<std::size_t>(g)].value() / zs;
    }
    out.log_normalizer[r] = std::log(zs / static_cast<double>(n)) + lref;
    out.effective_samples[r] = zs * zs / zsq.value();
  }

  out.mean = mean_acc / static_cast<double>(reps);
  const Eigen::VectorXd m2 = m2_acc / static_cast<double>(reps);
  out.variance.resize(G);
  for (int g = 0; g < G; ++g) {
    const double v = m2[g] - out.mean[g] * out.mean[g];
    if (v < 0.0) {
      out.variance[g] = 0.0;
      ++out.variance_clamped;
    } else {
      out.variance[g] = v;
    }
  }
  out.margin = credible_margin(out.variance);
  out.prior_bounds = field_bounds(basis);
  return out;
}

}  // namespace eit
