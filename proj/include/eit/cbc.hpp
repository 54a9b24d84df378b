#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "eit/lattice.hpp"

namespace eit {

// Riemann zeta for real s > 1, absolute error < 1e-12.
double zeta_riemann(double s);

// Weights of product-and-order form: gamma(u) = order_factor[|u|] * prod_{j in u} coord_factor[j].
// order_factor[0] == 1 so the empty set always has weight one.
struct PodWeights {
  double sigma = 1.0;
  double lambda = 1.0;
  Eigen::VectorXd beta;          // per-coordinate input sequence (empty for plain product weights)
  Eigen::VectorXd order_factor;  // indexed by order 0..s
  Eigen::VectorXd coord_factor;  // indexed by coordinate 0..s-1

  int dimension() const { return static_cast<int>(coord_factor.size()); }
  double gamma(std::span<const int> u) const;
};

// gamma(u) = (((|u|+1)!)^sigma * prod_j beta_j / kappa)^(2/(1+lambda)) with
// kappa = sqrt(2 zeta(2 lambda) / (2 pi^2)^lambda) and lambda chosen from (sigma, p):
//   lambda = p/(2-p)      if p in (2/3, 1/sigma),
//   lambda = 1/(2-2 eps)  if p in (0, min(2/3, 1/sigma)).
PodWeights pod_weights(double sigma, double p, const Eigen::VectorXd& beta, double epsilon = 0.05);

// Plain product weights gamma(u) = prod_{j in u} coord[j] (order factors all one).
PodWeights product_weights(const Eigen::VectorXd& coord);

struct CbcResult {
  LatticeRule rule;
  // Squared shift-averaged worst-case error after fixing the first d coordinates, d = 1..s.
  Eigen::VectorXd error_sq_by_dim;
};

// Greedy per-coordinate minimization of the shift-averaged worst-case error over odd
// candidates in {1,...,n-1}; ties resolve to the smallest candidate. Deterministic for
// any thread count.
CbcResult cbc_construct(std::int64_t n, int s, const PodWeights& weights, int threads = 0);

// Direct evaluation of the squared shift-averaged worst-case error of a rule.
double lattice_error_sq(const LatticeRule& rule, const PodWeights& weights);

// Value of [ (2/n) sum_{u != 0} gamma(u)^lambda * xi^|u| ]^(1/lambda) with
// xi = 2 zeta(2 lambda) / (2 pi^2)^lambda; upper bound for the squared worst-case error
// of a constructed rule, valid for every lambda in (1/2, 1].
double cbc_error_bound_sq(std::int64_t n, int s, const PodWeights& weights, double bound_lambda);

}  // namespace eit
