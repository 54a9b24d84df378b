#include "eit/cbc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

namespace {

bool is_power_of_two(std::int64_t n) { return n >= 2 && (n & (n - 1)) == 0; }

// Bernoulli numbers B_2, B_4, ..., B_18.
constexpr double kBernoulli[] = {
    1.0 / 6.0,    -1.0 / 30.0,      1.0 / 42.0, -1.0 / 30.0,       5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0, 43867.0 / 798.0};

// B2 kernel values omega[i] = B2(i/n) on the lattice grid. The upper half is
// mirrored bitwise (B2(1-x) = B2(x)) so that mathematically tied candidates z
// and n-z score bitwise equal and the tie resolves to the smaller one.
std::vector<double> kernel_table(std::int64_t n) {
  std::vector<double> omega(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i <= n / 2; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n);
    omega[static_cast<std::size_t>(i)] = x * x - x + 1.0 / 6.0;
  }
  for (std::int64_t i = n / 2 + 1; i < n; ++i)
    omega[static_cast<std::size_t>(i)] = omega[static_cast<std::size_t>(n - i)];
  return omega;
}

// Exact inverse of an odd z modulo the power of two (mask + 1), by 2-adic
// Newton iteration: each step doubles the number of correct low bits.
std::int64_t odd_inverse(std::int64_t z, std::int64_t mask) {
  std::uint64_t x = 1;
  const std::uint64_t uz = static_cast<std::uint64_t>(z);
  for (int it = 0; it < 6; ++it) x *= 2 - uz * x;
  return static_cast<std::int64_t>(x) & mask;
}

void check_weights_dim(const PodWeights& w, int s) {
  if (s < 1) throw std::invalid_argument("dimension must be >= 1");
  if (w.dimension() < s)
    throw std::invalid_argument("weight sequence shorter than requested dimension");
  if (w.order_factor.size() < s + 1)
    throw std::invalid_argument("order factors shorter than requested dimension");
}

}  // namespace

double zeta_riemann(double s) {
  if (!(s > 1.0)) throw std::invalid_argument("zeta argument must be > 1");
  // Euler-Maclaurin with N = 32 leading terms; correction error is below 1e-27
  // throughout s in (1, 40], far under the 1e-12 contract.
  constexpr int kN = 32;
  KahanSum sum;
  for (int k = 1; k < kN; ++k) sum.add(std::pow(static_cast<double>(k), -s));
  const double npow = std::pow(static_cast<double>(kN), -s);
  sum.add(0.5 * npow);
  sum.add(npow * static_cast<double>(kN) / (s - 1.0));
  double rising = s;          // s (s+1) ... (s + 2i - 2)
  double npow_shift = npow / static_cast<double>(kN);  // N^(-s - 2i + 1)
  double factorial = 2.0;     // (2i)!
  for (int i = 1; i <= 9; ++i) {
    sum.add(kBernoulli[i - 1] / factorial * rising * npow_shift);
    rising *= (s + 2.0 * i - 1.0) * (s + 2.0 * i);
    npow_shift /= static_cast<double>(kN) * static_cast<double>(kN);
    factorial *= (2.0 * i + 1.0) * (2.0 * i + 2.0);
  }
  return sum.value();
}

double PodWeights::gamma(std::span<const int> u) const {
  std::vector<int> idx(u.begin(), u.end());
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
    throw std::invalid_argument("subset contains a repeated coordinate");
  if (static_cast<std::int64_t>(idx.size()) >= order_factor.size())
    throw std::invalid_argument("subset larger than the weight order table");
  double g = order_factor[static_cast<Eigen::Index>(idx.size())];
  for (int j : idx) {
    if (j < 0 || j >= dimension()) throw std::invalid_argument("coordinate out of range");
    g *= coord_factor[j];
  }
  return g;
}

PodWeights pod_weights(double sigma, double p, const Eigen::VectorXd& beta, double epsilon) {
  if (!(sigma >= 1.0)) throw ConfigError("smoothness exponent sigma must be >= 1");
  if (beta.size() < 1) throw ConfigError("coordinate sequence beta must be non-empty");
  if ((beta.array() <= 0.0).any()) throw ConfigError("coordinate sequence beta must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in (0, 1/2)");

  double lambda = 0.0;
  const double inv_sigma = 1.0 / sigma;
  if (p > 2.0 / 3.0 && p < inv_sigma) {
    lambda = p / (2.0 - p);
  } else if (p > 0.0 && p < std::min(2.0 / 3.0, inv_sigma)) {
    lambda = 1.0 / (2.0 - 2.0 * epsilon);
  } else {
    throw ConfigError(
        "summability p admits no exponent: need p in (2/3, 1/sigma) or p in (0, min(2/3, "
        "1/sigma)); got p = " +
        std::to_string(p) + ", sigma = " + std::to_string(sigma));
  }

  const double xi = 2.0 * zeta_riemann(2.0 * lambda) / std::pow(2.0 * M_PI * M_PI, lambda);
  const double kappa = std::sqrt(xi);
  const double expo = 2.0 / (1.0 + lambda);

  PodWeights w;
  w.sigma = sigma;
  w.lambda = lambda;
  w.beta = beta;
  const int s = static_cast<int>(beta.size());
  w.coord_factor.resize(s);
  for (int j = 0; j < s; ++j) w.coord_factor[j] = std::pow(beta[j] / kappa, expo);
  w.order_factor.resize(s + 1);
  for (int ell = 0; ell <= s; ++ell)
    w.order_factor[ell] = std::exp(sigma * expo * std::lgamma(static_cast<double>(ell) + 2.0));
  return w;
}

PodWeights product_weights(const Eigen::VectorXd& coord) {
  if (coord.size() < 1) throw ConfigError("coordinate weight sequence must be non-empty");
  if ((coord.array() <= 0.0).any()) throw ConfigError("coordinate weights must be positive");
  PodWeights w;
  w.sigma = 1.0;
  w.lambda = 1.0;
  w.coord_factor = coord;
  w.order_factor = Eigen::VectorXd::Ones(coord.size() + 1);
  return w;
}

CbcResult cbc_construct(std::int64_t n, int s, const PodWeights& weights, int threads) {
  if (!is_power_of_two(n)) throw std::invalid_argument("point count must be a power of two >= 2");
  check_weights_dim(weights, s);
  const std::size_t un = static_cast<std::size_t>(n);
  const std::vector<double> omega = kernel_table(n);
  const std::int64_t mask = n - 1;

  // orders[k * (s+1) + ell]: elementary symmetric value of order ell of the per-coordinate
  // kernel contributions at node k, over the coordinates fixed so far.
  std::vector<double> orders(un * static_cast<std::size_t>(s + 1), 0.0);
  for (std::size_t k = 0; k < un; ++k) orders[k * (s + 1)] = 1.0;

  std::vector<double> q(un, 0.0);
  const std::int64_t half = n / 2;  // number of odd candidates
  std::vector<double> score(static_cast<std::size_t>(half), 0.0);

  CbcResult result;
  result.rule.n = n;
  result.rule.z.reserve(static_cast<std::size_t>(s));
  result.error_sq_by_dim.resize(s);
  double err_sq = 0.0;

  for (int j = 0; j < s; ++j) {
    const int max_order = j + 1;
    // q(k) = sum_ell order_factor[ell] * orders[k][ell-1].
    parallel_chunks(
        n, 4096,
        [&](std::int64_t lo, std::int64_t hi, std::int64_t) {
          for (std::int64_t k = lo; k < hi; ++k) {
            const double* row = &orders[static_cast<std::size_t>(k) * (s + 1)];
            double acc = 0.0;
            for (int ell = max_order; ell >= 1; --ell)
              acc += weights.order_factor[ell] * row[ell - 1];
            q[static_cast<std::size_t>(k)] = acc;
          }
        },
        threads);

    // Score every odd candidate z: sum_k omega[(k z) mod n] q(k), re-indexed as
    // sum_m omega[m] q((m / z) mod n) so the addition order does not depend on the
    // candidate. Mathematically tied candidates (all of them in the first
    // coordinate; every z <-> n-z pair) then score bitwise equal and the tie
    // resolves to the smallest z. Chunked over candidates; each candidate sums
    // sequentially, so scores do not depend on the thread count either.
    parallel_chunks(
        half, 16,
        [&](std::int64_t lo, std::int64_t hi, std::int64_t) {
          for (std::int64_t c = lo; c < hi; ++c) {
            const std::int64_t zinv = odd_inverse(2 * c + 1, mask);
            std::int64_t idx = 0;
            KahanSum acc;
            for (std::size_t m = 0; m < un; ++m) {
              acc.add(omega[m] * q[static_cast<std::size_t>(idx)]);
              idx = (idx + zinv) & mask;
            }
            score[static_cast<std::size_t>(c)] = acc.value();
          }
        },
        threads);

    std::int64_t best = 0;
    for (std::int64_t c = 1; c < half; ++c)
      if (score[static_cast<std::size_t>(c)] < score[static_cast<std::size_t>(best)]) best = c;
    const std::int64_t zj = 2 * best + 1;
    result.rule.z.push_back(static_cast<std::uint32_t>(zj));

    const double wj = weights.coord_factor[j];
    err_sq += wj * score[static_cast<std::size_t>(best)] / static_cast<double>(n);
    result.error_sq_by_dim[j] = err_sq;

    // Fold the chosen coordinate into the order table.
    parallel_chunks(
        n, 4096,
        [&](std::int64_t lo, std::int64_t hi, std::int64_t) {
          for (std::int64_t k = lo; k < hi; ++k) {
            const double x = wj * omega[static_cast<std::size_t>((k * zj) & mask)];
            double* row = &orders[static_cast<std::size_t>(k) * (s + 1)];
            for (int ell = max_order; ell >= 1; --ell) row[ell] += x * row[ell - 1];
          }
        },
        threads);
  }
  return result;
}

double lattice_error_sq(const LatticeRule& rule, const PodWeights& weights) {
  const int s = rule.dimension();
  check_weights_dim(weights, s);
  const std::int64_t n = rule.n;
  const std::vector<double> omega = kernel_table(n);
  const std::int64_t mask = n - 1;

  KahanSum total;
  std::vector<double> e(static_cast<std::size_t>(s) + 1, 0.0);
  for (std::int64_t k = 0; k < n; ++k) {
    std::fill(e.begin(), e.end(), 0.0);
    e[0] = 1.0;
    for (int j = 0; j < s; ++j) {
      const double x =
          weights.coord_factor[j] *
          omega[static_cast<std::size_t>((k * static_cast<std::int64_t>(rule.z[static_cast<std::size_t>(j)])) & mask)];
      for (int ell = std::min(j + 1, s); ell >= 1; --ell)
        e[static_cast<std::size_t>(ell)] += x * e[static_cast<std::size_t>(ell) - 1];
    }
    double node = 0.0;
    for (int ell = s; ell >= 1; --ell)
      node += weights.order_factor[ell] * e[static_cast<std::size_t>(ell)];
    total.add(node);
  }
  return total.value() / static_cast<double>(n);
}

double cbc_error_bound_sq(std::int64_t n, int s, const PodWeights& weights, double bound_lambda) {
  if (!is_power_of_two(n)) throw std::invalid_argument("point count must be a power of two >= 2");
  check_weights_dim(weights, s);
  if (!(bound_lambda > 0.5 && bound_lambda <= 1.0))
    throw std::invalid_argument("bound exponent must lie in (1/2, 1]");
  const double xi =
      2.0 * zeta_riemann(2.0 * bound_lambda) / std::pow(2.0 * M_PI * M_PI, bound_lambda);

  // Elementary symmetric sums of { coord_factor[j]^lambda * xi }.
  std::vector<double> e(static_cast<std::size_t>(s) + 1, 0.0);
  e[0] = 1.0;
  for (int j = 0; j < s; ++j) {
    const double x = std::pow(weights.coord_factor[j], bound_lambda) * xi;
    for (int ell = std::min(j + 1, s); ell >= 1; --ell)
      e[static_cast<std::size_t>(ell)] += x * e[static_cast<std::size_t>(ell) - 1];
  }
  KahanSum sum;
  for (int ell = 1; ell <= s; ++ell)
    sum.add(std::pow(weights.order_factor[ell], bound_lambda) * e[static_cast<std::size_t>(ell)]);
  const double inner = 2.0 / static_cast<double>(n) * sum.value();
  return std::pow(inner, 1.0 / bound_lambda);
}

}  // namespace eit
