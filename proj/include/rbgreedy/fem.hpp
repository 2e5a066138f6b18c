#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>
#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "rbgreedy/params.hpp"

namespace rbg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

/// Uniform triangulation of the unit square: grid_n x grid_n cells, each cut
/// along its lower-left to upper-right diagonal. Nodes are numbered row-major
/// (node = iy*(grid_n+1) + ix); unknowns are the (grid_n-1)^2 interior nodes,
/// also numbered row-major.
struct Mesh {
  int grid_n = 0;
  int k = 1;
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> triangles;
  /// Subdomain (coefficient cell) of each triangle.
  std::vector<int> triangle_cell;
  /// Node -> unknown index, or -1 on the boundary.
  std::vector<int> dof_of_node;

  std::size_t num_dofs() const { return static_cast<std::size_t>(grid_n - 1) * (grid_n - 1); }
  double h() const { return 1.0 / grid_n; }
};

Mesh build_mesh(int grid_n, int k);

/// Right-hand side of -div(a grad u) = f.
struct LoadSpec {
  enum class Kind { Constant, Manufactured };
  Kind kind = Kind::Constant;
  double value = 1.0;

  static LoadSpec constant(double c = 1.0) { return {Kind::Constant, c}; }
  /// f = 2 pi^2 sin(pi x) sin(pi y), whose solution for a = 1 is sin(pi x) sin(pi y).
  static LoadSpec manufactured() { return {Kind::Manufactured, 1.0}; }
};

/// One term y_j A_j of the affine decomposition, stored against the value
/// array of the shared sparsity pattern.
struct AffineComponent {
  std::vector<int> value_pos;
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<double> values;

  /// out += scale * A_j * x
  void multiply_add(const Vector& x, double scale, Vector& out) const;
};

class VInnerProduct;

/// A(y) = A0 + sum_j y_j A_j and the load vector, all on interior unknowns.
/// Immutable after assembly and safe to share between threads.
struct AffineOperator {
  SparseMatrix a0;
  std::vector<AffineComponent> components;
  Vector load;
  /// Unit-coefficient stiffness matrix: the H^1_0 inner product on V_h.
  SparseMatrix inner;
  std::shared_ptr<const VInnerProduct> vspace;
  std::shared_ptr<const Mesh> mesh;
  AffineCoefficientModel model;
  LoadSpec load_spec;

  std::size_t num_dofs() const { return static_cast<std::size_t>(load.size()); }
  std::size_t dim() const { return components.size(); }
  SparseMatrix component_matrix(std::size_t j) const;
  /// Matrix A(y) for arbitrary (unchecked) parameter values.
  SparseMatrix matrix(std::span<const double> y) const;
  /// out = A(y) x
  void apply(std::span<const double> y, const Vector& x, Vector& out) const;
};

/// Factorized V-inner-product matrix S, for Riesz representers.
class VInnerProduct {
 public:
  explicit VInnerProduct(const SparseMatrix& s);
  const SparseMatrix& matrix() const { return s_; }
  double inner(const Vector& a, const Vector& b) const;
  double norm(const Vector& a) const;
  /// z = S^{-1} r
  Vector riesz(const Vector& r) const;

 private:
  SparseMatrix s_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

struct Snapshot {
  Vector coeffs;
  double vnorm = 0.0;
};

AffineOperator assemble(const Mesh& mesh, const AffineCoefficientModel& model,
                        const LoadSpec& load = LoadSpec::constant());

/// Stiffness matrix for the coefficient a(y) assembled directly, element by
/// element, without the affine decomposition.
SparseMatrix assemble_direct(const Mesh& mesh, const AffineCoefficientModel& model,
                             const ParameterVector& y);

struct SolverOptions {
  /// Unknown count above which CG with a diagonal preconditioner replaces the
  /// sparse Cholesky factorization.
  std::size_t cg_threshold = 250000;
  double cg_tolerance = 1e-12;
  int cg_max_iterations = 20000;
};

/// Reusable high-fidelity solver. Owns its factorization workspace, so one
/// instance per thread.
class Solver {
 public:
  explicit Solver(std::shared_ptr<const AffineOperator> op, SolverOptions options = {});

  Snapshot solve(const ParameterVector& y);
  /// Solve for arbitrary parameter values; throws NumericalFailure if A(y) is
  /// not positive definite.
  Snapshot solve_raw(std::span<const double> y);

  const AffineOperator& op() const { return *op_; }
  std::size_t solve_count() const { return solves_; }

 private:
  std::shared_ptr<const AffineOperator> op_;
  SolverOptions options_;
  SparseMatrix work_;
  bool use_cg_ = false;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  std::size_t solves_ = 0;
};

Snapshot solve(const std::shared_ptr<const AffineOperator>& op, const ParameterVector& y);

double v_inner(const Snapshot& a, const Snapshot& b, const SparseMatrix& s);
double v_inner(const Vector& a, const Vector& b, const SparseMatrix& s);

/// ||f - A(y) v||_{V'} = ||S^{-1}(f - A(y) v)||_V.
double riesz_residual_norm(const AffineOperator& op, const ParameterVector& y, const Vector& v);
double riesz_residual_norm(const AffineOperator& op, const ParameterVector& y, const Snapshot& v);

struct DiscretizationErrors {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// ||u - u_h||_{L^2} and ||grad(u - u_h)||_{L^2} by high-order quadrature on
/// every triangle.
DiscretizationErrors discretization_errors(
    const Mesh& mesh, const Vector& uh, const std::function<double(double, double)>& u,
    const std::function<std::array<double, 2>(double, double)>& grad_u);

}  // namespace rbg
