#include "eit/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

namespace {

void check_spec(const BasisSpec& spec) {
  if (spec.dimension < 1) throw std::invalid_argument("basis dimension must be >= 1");
  if (!(spec.theta > 1.0)) throw std::invalid_argument("basis decay exponent theta must be > 1");
  if (!(spec.radius > 0.0)) throw std::invalid_argument("domain radius must be > 0");
  if (!(spec.amplitude > 0.0)) throw std::invalid_argument("basis amplitude must be > 0");
}

}  // namespace

std::vector<BasisIndex> enumerate_basis(const BasisSpec& spec) {
  check_spec(spec);
  const int s = spec.dimension;
  // The weight depends on k^2 + l^2 only, so once the s-th smallest value of
  // k^2 + l^2 stays below (box+1)^2 no pair outside the box can displace it.
  for (int box = std::max(2, int(std::ceil(std::sqrt(double(s)))) + 1);; box *= 2) {
    std::vector<BasisIndex> all;
    all.reserve(std::size_t(box) * box);
    for (int k = 1; k <= box; ++k)
      for (int l = 1; l <= box; ++l)
        all.push_back({k, l, spec.amplitude / std::pow(double(k) * k + double(l) * l, spec.theta)});
    std::sort(all.begin(), all.end(), [](const BasisIndex& a, const BasisIndex& b) {
      const long ra = long(a.k) * a.k + long(a.l) * a.l;
      const long rb = long(b.k) * b.k + long(b.l) * b.l;
      if (ra != rb) return ra < rb;  // smaller k^2+l^2 <=> larger weight
      return std::tuple(a.k + a.l, a.k) < std::tuple(b.k + b.l, b.k);
    });
    const auto& last = all[std::size_t(s) - 1];
    if (long(last.k) * last.k + long(last.l) * last.l <= long(box) * box) {
      all.resize(std::size_t(s));
      return all;
    }
  }
}

std::vector<double> basis_weights(const BasisSpec& spec) {
  std::vector<double> w;
  for (const auto& b : enumerate_basis(spec)) w.push_back(b.weight);
  return w;
}

FieldParams make_params(const BasisSpec& spec, std::span<const double> y) {
  check_spec(spec);
  if (int(y.size()) != spec.dimension)
    throw std::invalid_argument("parameter vector length " + std::to_string(y.size()) +
                                " does not match basis dimension " + std::to_string(spec.dimension));
  FieldParams p;
  p.y.resize(spec.dimension);
  for (int j = 0; j < spec.dimension; ++j) {
    if (!(std::abs(y[std::size_t(j)]) <= 0.5))
      throw std::invalid_argument("parameter component " + std::to_string(j + 1) +
                                  " outside the box [-1/2, 1/2]");
    p.y[j] = y[std::size_t(j)];
  }
  return p;
}

FieldParams random_params(const BasisSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  FieldParams p;
  p.y.resize(spec.dimension);
  for (int j = 0; j < spec.dimension; ++j) p.y[j] = uniform01(seed, std::uint64_t(j)) - 0.5;
  return p;
}

double eval_field(const BasisSpec& spec, std::span<const double> y, Vec2 x) {
  if (int(y.size()) != spec.dimension)
    throw std::invalid_argument("parameter vector length does not match basis dimension");
  const double r2 = x.x * x.x + x.y * x.y;
  if (r2 > spec.radius * spec.radius * (1.0 + 1e-12))
    throw std::invalid_argument("field evaluation point outside the disk");
  const auto basis = enumerate_basis(spec);
  double t = 0.0;
  for (int j = 0; j < spec.dimension; ++j) {
    const auto& b = basis[std::size_t(j)];
    t += y[std::size_t(j)] * b.weight * std::sin(M_PI * b.k * x.x / spec.radius) *
         std::sin(M_PI * b.l * x.y / spec.radius);
  }
  return std::exp(t);
}

FieldBounds field_bounds(const BasisSpec& spec) {
  double half_sum = 0.0;
  for (double w : basis_weights(spec)) half_sum += 0.5 * w;
  FieldBounds b;
  b.a_max = std::exp(half_sum);
  b.a_min = 1.0 / b.a_max;
  return b;
}

FieldEvaluator::FieldEvaluator(const BasisSpec& spec, std::span<const Vec2> points) {
  const auto basis = enumerate_basis(spec);
  psi_.resize(Eigen::Index(points.size()), spec.dimension);
  for (Eigen::Index i = 0; i < psi_.rows(); ++i) {
    const Vec2 p = points[std::size_t(i)];
    const double r2 = p.x * p.x + p.y * p.y;
    if (r2 > spec.radius * spec.radius * (1.0 + 1e-12))
      throw std::invalid_argument("field evaluation point outside the disk");
    for (int j = 0; j < spec.dimension; ++j) {
      const auto& b = basis[std::size_t(j)];
      psi_(i, j) = b.weight * std::sin(M_PI * b.k * p.x / spec.radius) *
                   std::sin(M_PI * b.l * p.y / spec.radius);
    }
  }
}

void FieldEvaluator::eval(std::span<const double> y, std::span<double> out) const {
  if (int(y.size()) != dimension()) throw std::invalid_argument("parameter length mismatch");
  if (int(out.size()) != num_points()) throw std::invalid_argument("output length mismatch");
  Eigen::Map<const Eigen::VectorXd> ym(y.data(), dimension());
  Eigen::Map<Eigen::VectorXd> om(out.data(), num_points());
  om.noalias() = psi_ * ym;
  om = om.array().exp();
}

}  // namespace eit
