#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace eit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/* Log-conductivity expansion on the disk of given radius:
     a(x) = exp( sum_j y_j * psi_j(x) ),
     psi_j(x) = amplitude / (k_j^2 + l_j^2)^theta
                * sin(pi k_j x1 / radius) * sin(pi l_j x2 / radius),
   with the (k, l) pairs ordered by descending coefficient. */
struct BasisSpec {
  int dimension = 20;      // number of retained terms s
  double theta = 2.0;      // coefficient decay exponent, > 1
  double radius = 14.0;    // disk radius
  double amplitude = 5.0;  // coefficient numerator

  bool operator==(const BasisSpec&) const = default;
};

struct BasisIndex {
  int k = 0;
  int l = 0;
  double weight = 0.0;  // amplitude / (k^2 + l^2)^theta, a sup-norm proxy for psi
};

/* First `dimension` index pairs sorted by descending weight; ties broken by
   (k + l, k) lexicographic order so the sequence is unique. */
std::vector<BasisIndex> enumerate_basis(const BasisSpec& spec);

/* Coefficient sequence weight_j in enumeration order. */
std::vector<double> basis_weights(const BasisSpec& spec);

/* Parameter vector in the closed box [-1/2, 1/2]^s (validated). */
struct FieldParams {
  Eigen::VectorXd y;
};
FieldParams make_params(const BasisSpec& spec, std::span<const double> y);
/* Seeded uniform draw from the parameter box; bit-identical per (spec, seed). */
FieldParams random_params(const BasisSpec& spec, std::uint64_t seed);

/* Point evaluation; x must lie in the closed disk. */
double eval_field(const BasisSpec& spec, std::span<const double> y, Vec2 x);

struct FieldBounds {
  double a_min = 0.0;
  double a_max = 0.0;
};
/* Uniform bounds exp(-/+ sum_j weight_j / 2), valid on the closed box. */
FieldBounds field_bounds(const BasisSpec& spec);

/* Precomputed basis values at a fixed point set; turns field evaluation for a
   fresh parameter vector into one matrix-vector product plus exp. */
class FieldEvaluator {
 public:
  FieldEvaluator(const BasisSpec& spec, std::span<const Vec2> points);

  int num_points() const { return int(psi_.rows()); }
  int dimension() const { return int(psi_.cols()); }
  const Eigen::MatrixXd& psi() const { return psi_; }

  /* out[i] = a(points[i]; y). out must have num_points() entries. */
  void eval(std::span<const double> y, std::span<double> out) const;

 private:
  Eigen::MatrixXd psi_;  // num_points x dimension
};

}  // namespace eit
