#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "eit/mesh.hpp"

namespace eit {

/* Electrode current pattern; components sum to zero. */
struct CurrentPattern {
  Eigen::VectorXd values;
};
CurrentPattern make_pattern(const Eigen::VectorXd& values);
/* I = e_1 - e_{k+1}, k in 1..count-1. */
CurrentPattern difference_pattern(int count, int k);
std::vector<CurrentPattern> reference_patterns(int count);

struct CemSolution {
  Eigen::VectorXd potential;  // nodal values of u
  Eigen::VectorXd voltages;   // electrode values U, sum exactly zero
  double energy = 0.0;        // bilinear form at the solution, equals I . U
  double hnorm = 0.0;         // energy norm of (u, U) with unit coefficients
  double apriori_ratio = 0.0; // hnorm * min(a_min, 1/z_max) / |I|
  double residual = 0.0;      // relative linear residual
};

/* Geometry-dependent part of the discrete complete electrode model on a fixed
   mesh: P1 stiffness slots (one-point centroid quadrature for the coefficient)
   plus exact electrode boundary-edge terms, with the last electrode voltage
   eliminated by the grounding sum U_M = -sum U_m. Immutable and shareable
   across threads. */
class CemSystem {
 public:
  CemSystem(const Mesh& mesh, const ElectrodeConfig& electrodes);

  const Mesh& mesh() const { return mesh_; }
  const ElectrodeConfig& electrodes() const { return electrodes_; }
  const std::vector<Vec2>& centroids() const { return centroids_; }
  int num_vertices() const { return int(mesh_.vertices.size()); }
  int num_electrodes() const { return electrodes_.count; }
  int dim() const { return num_vertices() + num_electrodes() - 1; }

  const Eigen::SparseMatrix<double>& pattern() const { return base_; }
  const Eigen::VectorXd& base_values() const { return base_copy_; }
  const Eigen::SparseMatrix<double>& unit_norm_matrix() const { return hmat_; }

  /* Adds coefficient-scaled stiffness into a value array laid out like
     pattern().valuePtr(). */
  void add_stiffness(std::span<const double> a_at_centroids, double* values) const;

  Eigen::VectorXd reduce_pattern(const CurrentPattern& I) const;  // grounded rhs
  double min_inverse_impedance_bound() const { return inv_zmax_; }

 private:
  Mesh mesh_;
  ElectrodeConfig electrodes_;
  std::vector<Vec2> centroids_;
  Eigen::SparseMatrix<double> base_;  // electrode terms, zeros on stiffness slots
  Eigen::VectorXd base_copy_;
  Eigen::SparseMatrix<double> hmat_;  // same form with a = 1, z = 1
  std::vector<std::array<int, 9>> slots_;     // value index per local entry
  std::vector<std::array<double, 9>> coefs_;  // geometric stiffness per triangle
  double inv_zmax_ = 0.0;
};

/* Per-thread solver: holds the value buffer and the sparse LDLT factorization
   (symbolic analysis done once, numeric refactorization per sample). */
class CemSolver {
 public:
  explicit CemSolver(const CemSystem& system);

  /* a sampled at triangle centroids; throws on non-positive samples or
     factorization failure. */
  void factor(std::span<const double> a_at_centroids);

  CemSolution solve(const CurrentPattern& I) const;
  /* Electrode voltages for several patterns, reusing the factorization:
     column p holds U for patterns[p]. */
  Eigen::MatrixXd observe(std::span<const CurrentPattern> patterns) const;

  const CemSystem& system() const { return sys_; }

 private:
  const CemSystem& sys_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  double min_sample_ = 0.0;
  bool factored_ = false;
};

/* One-shot surface used by the CLI, tests and bindings. */
struct AssembledSystem {
  std::shared_ptr<const CemSystem> system;
  std::shared_ptr<CemSolver> solver;
};
AssembledSystem assemble_system(const Mesh& mesh, const std::function<double(Vec2)>& conductivity,
                                const ElectrodeConfig& electrodes);
CemSolution solve_cem(const AssembledSystem& sys, const CurrentPattern& I);
Eigen::MatrixXd observation_operator(const AssembledSystem& sys,
                                     std::span<const CurrentPattern> patterns);

}  // namespace eit
