#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace eit {

/* Rank-1 lattice rule t_k = {k z / n}, k = 0..n-1, with power-of-two modulus
   and odd components, so every 1D projection is the full grid {0, 1/n, ...}. */
struct LatticeRule {
  std::int64_t n = 0;
  std::vector<std::uint32_t> z;

  int dimension() const { return int(z.size()); }
};

/* Validates and reduces components mod n (odd stays odd, n is even). */
LatticeRule make_lattice(std::int64_t n, std::span<const std::uint32_t> z, int s);
/* The embedded default generating vector (components for up to 32 dimensions). */
std::span<const std::uint32_t> default_generating_vector();
LatticeRule default_lattice(std::int64_t n, int s);

struct GeneratingVectorFile {
  std::vector<std::uint32_t> z;
  std::optional<std::int64_t> modulus;
};
/* One integer per line; optional "# modulus n" line; other #-lines ignored. */
GeneratingVectorFile load_generating_vector(std::istream& is);
void save_generating_vector(std::span<const std::uint32_t> z, std::int64_t modulus,
                            std::ostream& os);

/* Random shifts, uniform in [0,1)^s; bit-identical regeneration per seed. */
struct ShiftSet {
  std::uint64_t seed = 0;
  Eigen::MatrixXd delta;  // count x dim

  int count() const { return int(delta.rows()); }
  int dimension() const { return int(delta.cols()); }
};
ShiftSet make_shifts(int count, int dim, std::uint64_t seed);

/* Integer coordinate (k * z_j) mod n: exact, used for the group-structure and
   projection properties. */
std::int64_t lattice_coord_int(const LatticeRule& rule, std::int64_t k, int j);
/* Unshifted points in [0,1)^s, one row per point. */
Eigen::MatrixXd lattice_points(const LatticeRule& rule);
/* Shifted point {t_k + delta_r} written into out. */
void shifted_lattice_point(const LatticeRule& rule, const ShiftSet& shifts, int r, std::int64_t k,
                           std::span<double> out);
/* i.i.d. uniform point, stream position k of replication seed. */
void mc_point(std::uint64_t rep_seed, std::int64_t k, std::span<double> out);

/* Affine map from [0,1)^s onto the centered parameter box [-1/2, 1/2)^s. */
inline double to_parameter_box(double u) { return u - 0.5; }
void to_parameter_box(std::span<double> u);

/* Randomly shifted lattice cubature / plain Monte Carlo for a vector-valued
   integrand over the centered box. Accumulation is compensated and chunked in
   a fixed order, so results do not depend on the thread count. */
using Integrand = std::function<void(std::span<const double>, std::span<double>)>;

struct CubatureResult {
  Eigen::MatrixXd per_rep;    // one row per shift / replication
  Eigen::VectorXd mean;       // average of the rows
  Eigen::VectorXd std_error;  // sqrt of sample variance of rows / count
};
CubatureResult qmc_mean(const Integrand& f, int out_dim, const LatticeRule& rule,
                        const ShiftSet& shifts, int threads = 0);
CubatureResult mc_mean(const Integrand& f, int out_dim, int point_dim, std::int64_t n,
                       int replications, std::uint64_t seed, int threads = 0);

/* How the posterior sweep draws its nodes. */
struct QmcPlan {
  LatticeRule rule;
  ShiftSet shifts;
};
struct McPlan {
  std::int64_t n = 0;
  int replications = 0;
  std::uint64_t seed = 0;
};
using SamplingPlan = std::variant<QmcPlan, McPlan>;

}  // namespace eit
