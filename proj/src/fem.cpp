#include "eit/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eit/errors.hpp"

namespace eit {

namespace {

double edge_length(const Mesh& mesh, const std::array<int, 2>& e) {
  const Vec2 a = mesh.vertices[std::size_t(e[0])];
  const Vec2 b = mesh.vertices[std::size_t(e[1])];
  return std::hypot(a.x - b.x, a.y - b.y);
}

/* Electrode boundary terms of the grounded system as triplets. The last
   electrode's voltage is eliminated via U_last = -sum of the others, which
   folds its column into every reduced column. Edge mass on a straight edge
   with P1 traces: diag L/3, off-diag L/6, first moment L/2, measure L. */
void electrode_triplets(const Mesh& mesh, const Eigen::VectorXd& z, int nv, int M,
                        std::vector<Eigen::Triplet<double>>& trip) {
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    const int m = mesh.boundary_tag[e];
    if (m < 0) continue;
    const double L = edge_length(mesh, mesh.boundary_edges[e]);
    const double iz = 1.0 / z[m];
    const int i = mesh.boundary_edges[e][0];
    const int j = mesh.boundary_edges[e][1];
    trip.emplace_back(i, i, L / 3.0 * iz);
    trip.emplace_back(j, j, L / 3.0 * iz);
    trip.emplace_back(i, j, L / 6.0 * iz);
    trip.emplace_back(j, i, L / 6.0 * iz);
    if (m < M - 1) {
      const double bij = -L / 2.0 * iz;
      for (int v : {i, j}) {
        trip.emplace_back(v, nv + m, bij);
        trip.emplace_back(nv + m, v, bij);
      }
      trip.emplace_back(nv + m, nv + m, L * iz);
    } else {
      const double bij = L / 2.0 * iz;  // minus the eliminated column
      for (int c = 0; c < M - 1; ++c) {
        for (int v : {i, j}) {
          trip.emplace_back(v, nv + c, bij);
          trip.emplace_back(nv + c, v, bij);
        }
        for (int d = 0; d < M - 1; ++d) trip.emplace_back(nv + c, nv + d, L * iz);
      }
    }
  }
}

struct LocalStiffness {
  std::array<double, 9> s;  // row-major 3x3, for unit coefficient
};

LocalStiffness local_stiffness(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[std::size_t(t)];
  const Vec2 p0 = mesh.vertices[std::size_t(tri[0])];
  const Vec2 p1 = mesh.vertices[std::size_t(tri[1])];
  const Vec2 p2 = mesh.vertices[std::size_t(tri[2])];
  const double area = triangle_area(mesh, t);
  const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
  const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
  LocalStiffness ls{};
  for (int a = 0; a < 3; ++a)
    for (int bb = 0; bb < 3; ++bb) ls.s[std::size_t(3 * a + bb)] = (b[a] * b[bb] + c[a] * c[bb]) / (4.0 * area);
  return ls;
}

}  // namespace

CurrentPattern make_pattern(const Eigen::VectorXd& values) {
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (std::abs(values.sum()) > 1e-12 * scale * values.size())
    throw std::invalid_argument("current pattern does not sum to zero");
  return CurrentPattern{values};
}

CurrentPattern difference_pattern(int count, int k) {
  if (k < 1 || k >= count) throw std::invalid_argument("pattern index out of range");
  Eigen::VectorXd I = Eigen::VectorXd::Zero(count);
  I[0] = 1.0;
  I[k] = -1.0;
  return CurrentPattern{I};
}

std::vector<CurrentPattern> reference_patterns(int count) {
  std::vector<CurrentPattern> out;
  for (int k = 1; k < count; ++k) out.push_back(difference_pattern(count, k));
  return out;
}

CemSystem::CemSystem(const Mesh& mesh, const ElectrodeConfig& electrodes)
    : mesh_(mesh), electrodes_(electrodes) {
  validate_mesh(mesh_);
  const int M = electrodes_.count;
  if (M != mesh_.num_electrodes)
    throw std::invalid_argument("electrode config does not match mesh electrode count");
  if (electrodes_.contact_impedance.size() != M)
    throw std::invalid_argument("contact impedance count does not match electrode count");
  for (int m = 0; m < M; ++m)
    if (!(electrodes_.contact_impedance[m] > 0))
      throw std::invalid_argument("contact impedances must be positive");
  inv_zmax_ = 1.0 / electrodes_.contact_impedance.maxCoeff();

  const int nv = num_vertices();
  const int nt = int(mesh_.triangles.size());
  centroids_.resize(std::size_t(nt));
  for (int t = 0; t < nt; ++t) centroids_[std::size_t(t)] = triangle_centroid(mesh_, t);

  // pattern + electrode base values: stiffness slots carry zero here
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(nt) * 9 + mesh_.boundary_edges.size() * 12);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[std::size_t(t)];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(tri[std::size_t(a)], tri[std::size_t(b)], 0.0);
  }
  electrode_triplets(mesh_, electrodes_.contact_impedance, nv, M, trip);
  base_.resize(dim(), dim());
  base_.setFromTriplets(trip.begin(), trip.end());
  base_.makeCompressed();
  base_copy_ = Eigen::Map<const Eigen::VectorXd>(base_.valuePtr(), base_.nonZeros());

  // slot lookup per triangle entry (binary search in the compressed columns)
  slots_.resize(std::size_t(nt));
  coefs_.resize(std::size_t(nt));
  const int* outer = base_.outerIndexPtr();
  const int* inner = base_.innerIndexPtr();
  auto slot_of = [&](int row, int col) {
    int lo = outer[col], hi = outer[col + 1];
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (inner[mid] < row)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  };
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[std::size_t(t)];
    const LocalStiffness ls = local_stiffness(mesh_, t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        slots_[std::size_t(t)][std::size_t(3 * a + b)] =
            slot_of(tri[std::size_t(a)], tri[std::size_t(b)]);
        coefs_[std::size_t(t)][std::size_t(3 * a + b)] = ls.s[std::size_t(3 * a + b)];
      }
  }

  // unit-coefficient energy matrix (a = 1, z = 1), for the H-norm diagnostic
  std::vector<Eigen::Triplet<double>> htrip;
  htrip.reserve(trip.size());
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[std::size_t(t)];
    const LocalStiffness ls = local_stiffness(mesh_, t);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        htrip.emplace_back(tri[std::size_t(a)], tri[std::size_t(b)], ls.s[std::size_t(3 * a + b)]);
  }
  electrode_triplets(mesh_, Eigen::VectorXd::Ones(M), nv, M, htrip);
  hmat_.resize(dim(), dim());
  hmat_.setFromTriplets(htrip.begin(), htrip.end());
  hmat_.makeCompressed();
}

void CemSystem::add_stiffness(std::span<const double> a, double* values) const {
  const int nt = int(mesh_.triangles.size());
  if (int(a.size()) != nt) throw std::invalid_argument("conductivity sample count mismatch");
  for (int t = 0; t < nt; ++t) {
    const double at = a[std::size_t(t)];
    const auto& slot = slots_[std::size_t(t)];
    const auto& coef = coefs_[std::size_t(t)];
    for (int e = 0; e < 9; ++e) values[slot[std::size_t(e)]] += at * coef[std::size_t(e)];
  }
}

Eigen::VectorXd CemSystem::reduce_pattern(const CurrentPattern& I) const {
  const int M = electrodes_.count;
  if (I.values.size() != M) throw std::invalid_argument("current pattern length mismatch");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim());
  for (int m = 0; m < M - 1; ++m) b[num_vertices() + m] = I.values[m] - I.values[M - 1];
  return b;
}

CemSolver::CemSolver(const CemSystem& system) : sys_(system), matrix_(system.pattern()) {
  ldlt_.analyzePattern(matrix_);
}

void CemSolver::factor(std::span<const double> a) {
  const int nt = int(sys_.mesh().triangles.size());
  if (int(a.size()) != nt) throw std::invalid_argument("conductivity sample count mismatch");
  for (int t = 0; t < nt; ++t)
    if (!(a[std::size_t(t)] > 0.0))
      throw NumericalError("non-positive conductivity sample at quadrature point " +
                           std::to_string(t));
  min_sample_ = *std::min_element(a.begin(), a.end());
  Eigen::Map<Eigen::VectorXd>(matrix_.valuePtr(), matrix_.nonZeros()) = sys_.base_values();
  sys_.add_stiffness(a, matrix_.valuePtr());
  ldlt_.factorize(matrix_);
  if (ldlt_.info() != Eigen::Success)
    throw NumericalError("CEM factorization failed (dim " + std::to_string(sys_.dim()) +
                         ", mesh width " + std::to_string(sys_.mesh().mesh_width) + ")");
  factored_ = true;
}

CemSolution CemSolver::solve(const CurrentPattern& I) const {
  if (!factored_) throw std::logic_error("solve() before factor()");
  make_pattern(I.values);  // validate the zero-sum invariant
  const Eigen::VectorXd b = sys_.reduce_pattern(I);
  const int nv = sys_.num_vertices();
  const int M = sys_.num_electrodes();

  Eigen::VectorXd x = ldlt_.solve(b);
  const double bnorm = b.norm();
  double res = bnorm > 0 ? (matrix_ * x - b).norm() / bnorm : 0.0;
  if (res > 1e-12 && bnorm > 0) {  // one refinement step
    x += ldlt_.solve(b - matrix_ * x);
    res = (matrix_ * x - b).norm() / bnorm;
  }
  if (!(res <= 1e-8))
    throw NumericalError("CEM solve residual " + std::to_string(res) + " too large");

  CemSolution sol;
  sol.potential = x.head(nv);
  sol.voltages.resize(M);
  double acc = 0.0;
  for (int m = 0; m < M - 1; ++m) {
    sol.voltages[m] = x[nv + m];
    acc += x[nv + m];
  }
  sol.voltages[M - 1] = -acc;  // grounding: voltages sum to zero exactly
  sol.residual = res;
  sol.energy = b.dot(x);
  sol.hnorm = std::sqrt(std::max(0.0, x.dot(sys_.unit_norm_matrix() * x)));
  const double inorm = I.values.norm();
  sol.apriori_ratio =
      inorm > 0 ? sol.hnorm * std::min(min_sample_, sys_.min_inverse_impedance_bound()) / inorm : 0.0;
  return sol;
}

Eigen::MatrixXd CemSolver::observe(std::span<const CurrentPattern> patterns) const {
  if (!factored_) throw std::logic_error("observe() before factor()");
  const int nv = sys_.num_vertices();
  const int M = sys_.num_electrodes();
  const int P = int(patterns.size());
  Eigen::MatrixXd B(sys_.dim(), P);
  for (int p = 0; p < P; ++p) B.col(p) = sys_.reduce_pattern(patterns[std::size_t(p)]);
  Eigen::MatrixXd X = ldlt_.solve(B);
  const double bnorm = B.norm();
  if (bnorm > 0) {
    double res = (matrix_ * X - B).norm() / bnorm;
    if (res > 1e-12) {
      X += ldlt_.solve(B - matrix_ * X);
      res = (matrix_ * X - B).norm() / bnorm;
    }
    if (!(res <= 1e-8))
      throw NumericalError("CEM observation residual " + std::to_string(res) + " too large");
  }
  Eigen::MatrixXd U(M, P);
  for (int p = 0; p < P; ++p) {
    double acc = 0.0;
    for (int m = 0; m < M - 1; ++m) {
      U(m, p) = X(nv + m, p);
      acc += X(nv + m, p);
    }
    U(M - 1, p) = -acc;
  }
  return U;
}

AssembledSystem assemble_system(const Mesh& mesh, const std::function<double(Vec2)>& conductivity,
                                const ElectrodeConfig& electrodes) {
  auto system = std::make_shared<CemSystem>(mesh, electrodes);
  auto solver = std::make_shared<CemSolver>(*system);
  std::vector<double> a;
  a.reserve(system->centroids().size());
  for (const Vec2& c : system->centroids()) a.push_back(conductivity(c));
  solver->factor(a);
  AssembledSystem out;
  out.system = std::move(system);
  out.solver = std::move(solver);
  return out;
}

CemSolution solve_cem(const AssembledSystem& sys, const CurrentPattern& I) {
  return sys.solver->solve(I);
}

Eigen::MatrixXd observation_operator(const AssembledSystem& sys,
                                     std::span<const CurrentPattern> patterns) {
  return sys.solver->observe(patterns);
}

}  // namespace eit
