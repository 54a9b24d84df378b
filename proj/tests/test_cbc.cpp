#include <cmath>
#include <vector>

#include "doctest.h"
#include "eit/cbc.hpp"
#include "eit/errors.hpp"
#include "eit/numeric.hpp"

using namespace eit;

namespace {

// Same quadrature error as the construction, evaluated directly for one rule.
double direct_error_sq(std::int64_t n, const std::vector<std::uint32_t>& z,
                       const PodWeights& weights) {
  LatticeRule rule = make_lattice(n, z, int(z.size()));
  return lattice_error_sq(rule, weights);
}

}  // namespace

TEST_CASE("zeta oracle values") {
  CHECK(zeta_riemann(2.0) == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-14));
  CHECK(zeta_riemann(4.0) == doctest::Approx(std::pow(M_PI, 4) / 90.0).epsilon(1e-14));
  // zeta(20/19), the exponent pair produced by p = 0.5, eps = 0.05
  CHECK(zeta_riemann(20.0 / 19.0) == doctest::Approx(19.581034607100785).epsilon(1e-12));
  CHECK_THROWS_AS(zeta_riemann(1.0), std::invalid_argument);
}

TEST_CASE("weight exponent selection follows the two summability cases") {
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.5, 0.25;

  SUBCASE("small p uses the epsilon-rate case") {
    const PodWeights w = pod_weights(1.0, 0.5, beta, 0.05);
    CHECK(w.lambda == doctest::Approx(1.0 / 1.9).epsilon(1e-15));  // 1 / (2 - 2 eps)
  }
  SUBCASE("p above two-thirds uses lambda = p / (2 - p)") {
    const PodWeights w = pod_weights(1.0, 0.8, beta, 0.05);
    CHECK(w.lambda == doctest::Approx(0.8 / 1.2).epsilon(1e-15));
  }
  SUBCASE("invalid p rejected") {
    CHECK_THROWS_AS(pod_weights(1.0, 1.0, beta, 0.05), ConfigError);
    CHECK_THROWS_AS(pod_weights(1.0, 0.0, beta, 0.05), ConfigError);
    CHECK_THROWS_AS(pod_weights(0.5, 0.5, beta, 0.05), ConfigError);
  }
}

TEST_CASE("weight factors match their defining formulas") {
  Eigen::VectorXd beta(4);
  beta << 2.0, 1.0, 0.5, 0.125;
  const PodWeights w = pod_weights(1.0, 0.55, beta, 0.05);
  const double lambda = w.lambda;
  const double kappa = std::sqrt(2.0 * zeta_riemann(2.0 * lambda) /
                                 std::pow(2.0 * M_PI * M_PI, lambda));
  const double expo = 2.0 / (1.0 + lambda);

  REQUIRE(w.coord_factor.size() == 4);
  for (int j = 0; j < 4; ++j)
    CHECK(w.coord_factor[j] == doctest::Approx(std::pow(beta[j] / kappa, expo)).epsilon(1e-13));

  REQUIRE(w.order_factor.size() == 5);
  CHECK(w.order_factor[0] == 1.0);
  for (int ell = 1; ell <= 4; ++ell) {
    double fact = 1.0;
    for (int i = 2; i <= ell + 1; ++i) fact *= i;
    CHECK(w.order_factor[ell] == doctest::Approx(std::pow(fact, expo)).epsilon(1e-12));
  }

  // gamma of a subset: order factor times coordinate product
  const int u[] = {0, 2};
  CHECK(w.gamma(u) ==
        doctest::Approx(w.order_factor[2] * w.coord_factor[0] * w.coord_factor[2]).epsilon(1e-14));
  const int bad[] = {1, 1};
  CHECK_THROWS_AS(w.gamma(bad), std::invalid_argument);
}

TEST_CASE("one-dimensional construction has the closed-form error") {
  Eigen::VectorXd coord(1);
  coord << 3.0;
  const PodWeights w = product_weights(coord);
  const CbcResult result = cbc_construct(8, 1, w);
  REQUIRE(result.rule.z.size() == 1);
  CHECK(result.rule.z[0] == 1);
  // error^2 = gamma_1 * (1/n) * sum_k B2(k/n) / n = gamma_1 / (6 n^2)
  CHECK(result.error_sq_by_dim[0] == doctest::Approx(3.0 / (6.0 * 64.0)).epsilon(1e-13));
}

TEST_CASE("incremental errors equal the direct evaluation at every dimension") {
  Eigen::VectorXd beta(5);
  beta << 1.25, 0.2, 0.2, 0.078125, 0.05;
  const PodWeights w = pod_weights(1.0, 0.55, beta, 0.05);
  const CbcResult result = cbc_construct(64, 5, w);
  for (int d = 1; d <= 5; ++d) {
    std::vector<std::uint32_t> zd(result.rule.z.begin(), result.rule.z.begin() + d);
    const double direct = direct_error_sq(64, zd, w);
    CHECK(result.error_sq_by_dim[d - 1] == doctest::Approx(direct).epsilon(1e-11));
  }
}

TEST_CASE("ties resolve to the smallest candidate and components stay below n/2") {
  Eigen::VectorXd coord = Eigen::VectorXd::Ones(4);
  const PodWeights w = product_weights(coord);
  const CbcResult result = cbc_construct(32, 4, w);
  CHECK(result.rule.z[0] == 1);  // every candidate ties in one dimension
  for (std::uint32_t zj : result.rule.z) {
    CHECK(zj % 2 == 1);
    CHECK(zj <= 16);  // z and n - z tie exactly; the smaller one wins
  }
}

TEST_CASE("two-dimensional construction is exhaustively optimal") {
  // With n = 16 the greedy second step searches the full quotient of generating
  // pairs, so the constructed rule must attain the exhaustive-search minimum.
  const std::int64_t n = 16;
  Eigen::VectorXd coord = Eigen::VectorXd::Ones(2);
  const PodWeights w = product_weights(coord);
  const CbcResult result = cbc_construct(n, 2, w);

  double best = 1e300;
  for (std::uint32_t z2 = 1; z2 < n; z2 += 2)
    best = std::min(best, direct_error_sq(n, {1, z2}, w));
  const double constructed = direct_error_sq(n, {result.rule.z[0], result.rule.z[1]}, w);
  CHECK(constructed <= best * (1.0 + 1e-12));
  CHECK(result.error_sq_by_dim[1] == doctest::Approx(best).epsilon(1e-11));
}

TEST_CASE("constructed error satisfies the worst-case bound") {
  Eigen::VectorXd beta(8);
  for (int j = 0; j < 8; ++j) beta[j] = 1.0 / double((j + 1) * (j + 1));
  const PodWeights w = pod_weights(1.0, 0.55, beta, 0.05);

  for (std::int64_t n : {64LL, 256LL}) {
    const CbcResult result = cbc_construct(n, 8, w);
    const double err = result.error_sq_by_dim[7];
    CHECK(err <= cbc_error_bound_sq(n, 8, w, w.lambda) * (1.0 + 1e-12));
    // lambda = 1 is always admissible in the bound
    CHECK(err <= cbc_error_bound_sq(n, 8, w, 1.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("construction is independent of the thread count") {
  Eigen::VectorXd beta(6);
  for (int j = 0; j < 6; ++j) beta[j] = std::pow(0.6, j);
  const PodWeights w = pod_weights(1.0, 0.55, beta, 0.05);
  const CbcResult serial = cbc_construct(128, 6, w, 1);
  const CbcResult parallel = cbc_construct(128, 6, w, 4);
  CHECK(serial.rule.z == parallel.rule.z);
  CHECK((serial.error_sq_by_dim - parallel.error_sq_by_dim).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("construction validates its inputs") {
  Eigen::VectorXd coord = Eigen::VectorXd::Ones(2);
  const PodWeights w = product_weights(coord);
  CHECK_THROWS_AS(cbc_construct(24, 2, w), std::invalid_argument);
  CHECK_THROWS_AS(cbc_construct(16, 3, w), std::invalid_argument);
  CHECK_THROWS_AS(cbc_construct(16, 0, w), std::invalid_argument);
}
