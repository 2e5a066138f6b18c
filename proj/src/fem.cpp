#include "rbgreedy/fem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "rbgreedy/errors.hpp"

namespace rbg {
namespace {

// Six-point Gauss-Legendre rule on [0,1].
constexpr std::array<double, 6> kGaussNodes = {
    0.5 * (1.0 - 0.9324695142031521), 0.5 * (1.0 - 0.6612093864662645),
    0.5 * (1.0 - 0.2386191860831969), 0.5 * (1.0 + 0.2386191860831969),
    0.5 * (1.0 + 0.6612093864662645), 0.5 * (1.0 + 0.9324695142031521)};
constexpr std::array<double, 6> kGaussWeights = {
    0.5 * 0.1713244923791704, 0.5 * 0.3607615730481386, 0.5 * 0.4679139345726910,
    0.5 * 0.4679139345726910, 0.5 * 0.3607615730481386, 0.5 * 0.1713244923791704};

struct TriangleQuadPoint {
  std::array<double, 3> bary;
  double weight;  // includes the reference-to-physical area factor (2|T|)
};

// Collapsed (Duffy) tensor rule on the reference triangle; exact for degree 11.
const std::vector<TriangleQuadPoint>& reference_rule() {
  static const std::vector<TriangleQuadPoint> rule = [] {
    std::vector<TriangleQuadPoint> pts;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i) {
      for (std::size_t j = 0; j < kGaussNodes.size(); ++j) {
        const double xi = kGaussNodes[i];
        const double eta = kGaussNodes[j] * (1.0 - xi);
        pts.push_back({{1.0 - xi - eta, xi, eta}, kGaussWeights[i] * kGaussWeights[j] * (1.0 - xi)});
      }
    }
    return pts;
  }();
  return rule;
}

struct ElementGeometry {
  double area;
  std::array<std::array<double, 2>, 3> grad;  // gradients of the barycentric coordinates
};

ElementGeometry element_geometry(const Mesh& mesh, const std::array<int, 3>& tri) {
  const auto& p0 = mesh.nodes[tri[0]];
  const auto& p1 = mesh.nodes[tri[1]];
  const auto& p2 = mesh.nodes[tri[2]];
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  ElementGeometry g;
  g.area = 0.5 * std::abs(det);
  const std::array<const std::array<double, 2>*, 3> p = {&p0, &p1, &p2};
  for (int i = 0; i < 3; ++i) {
    const auto& a = *p[(i + 1) % 3];
    const auto& b = *p[(i + 2) % 3];
    g.grad[i] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
  }
  return g;
}

// Unit-coefficient element stiffness.
std::array<std::array<double, 3>, 3> element_stiffness(const ElementGeometry& g) {
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      k[i][j] = g.area * (g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1]);
  return k;
}

int value_position(const SparseMatrix& m, int row, int col) {
  const int* begin = m.innerIndexPtr() + m.outerIndexPtr()[col];
  const int* end = m.innerIndexPtr() + m.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(begin, end, row);
  if (it == end || *it != row) throw std::logic_error("entry outside sparsity pattern");
  return static_cast<int>(it - m.innerIndexPtr());
}

void check_alignment(const Mesh& mesh, const AffineCoefficientModel& model) {
  if (model.k != mesh.k || mesh.grid_n % model.k != 0 ||
      model.dim() != static_cast<std::size_t>(model.k) * model.k) {
    throw InvalidArgument("mesh (grid_n=" + std::to_string(mesh.grid_n) + ", k=" +
                          std::to_string(mesh.k) + ") is not aligned with the coefficient grid k=" +
                          std::to_string(model.k));
  }
}

SparseMatrix assemble_weighted(const Mesh& mesh, const std::vector<double>& cell_weight) {
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto k = element_stiffness(element_geometry(mesh, tri));
    const double w = cell_weight[mesh.triangle_cell[t]];
    for (int a = 0; a < 3; ++a) {
      const int ra = mesh.dof_of_node[tri[a]];
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int cb = mesh.dof_of_node[tri[b]];
        if (cb < 0) continue;
        triplets.emplace_back(ra, cb, w * k[a][b]);
      }
    }
  }
  const int n = static_cast<int>(mesh.num_dofs());
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

Mesh build_mesh(int grid_n, int k) {
  if (grid_n < 2) throw InvalidArgument("grid_n must be at least 2");
  if (k < 1 || grid_n % k != 0) {
    throw InvalidArgument("coefficient grid k=" + std::to_string(k) + " does not divide grid_n=" +
                          std::to_string(grid_n));
  }
  Mesh mesh;
  mesh.grid_n = grid_n;
  mesh.k = k;
  const int np = grid_n + 1;
  const double h = 1.0 / grid_n;
  mesh.nodes.reserve(static_cast<std::size_t>(np) * np);
  mesh.dof_of_node.assign(static_cast<std::size_t>(np) * np, -1);
  int dof = 0;
  for (int iy = 0; iy < np; ++iy) {
    for (int ix = 0; ix < np; ++ix) {
      mesh.nodes.push_back({ix * h, iy * h});
      if (ix > 0 && ix < grid_n && iy > 0 && iy < grid_n) mesh.dof_of_node[iy * np + ix] = dof++;
    }
  }
  const int cells_per_block = grid_n / k;
  for (int iy = 0; iy < grid_n; ++iy) {
    for (int ix = 0; ix < grid_n; ++ix) {
      const int n00 = iy * np + ix;
      const int n10 = n00 + 1;
      const int n01 = n00 + np;
      const int n11 = n01 + 1;
      const int cell = (iy / cells_per_block) * k + ix / cells_per_block;
      mesh.triangles.push_back({n00, n10, n11});
      mesh.triangles.push_back({n00, n11, n01});
      mesh.triangle_cell.push_back(cell);
      mesh.triangle_cell.push_back(cell);
    }
  }
  return mesh;
}

void AffineComponent::multiply_add(const Vector& x, double scale, Vector& out) const {
  for (std::size_t e = 0; e < values.size(); ++e) out[rows[e]] += scale * values[e] * x[cols[e]];
}

SparseMatrix AffineOperator::component_matrix(std::size_t j) const {
  SparseMatrix m = a0;
  m.coeffs().setZero();
  const auto& c = components.at(j);
  for (std::size_t e = 0; e < c.values.size(); ++e) m.valuePtr()[c.value_pos[e]] = c.values[e];
  return m;
}

SparseMatrix AffineOperator::matrix(std::span<const double> y) const {
  if (y.size() != components.size()) throw InvalidArgument("parameter dimension mismatch");
  SparseMatrix m = a0;
  double* v = m.valuePtr();
  for (std::size_t j = 0; j < components.size(); ++j) {
    const auto& c = components[j];
    for (std::size_t e = 0; e < c.values.size(); ++e) v[c.value_pos[e]] += y[j] * c.values[e];
  }
  return m;
}

void AffineOperator::apply(std::span<const double> y, const Vector& x, Vector& out) const {
  if (y.size() != components.size()) throw InvalidArgument("parameter dimension mismatch");
  out = a0 * x;
  for (std::size_t j = 0; j < components.size(); ++j) components[j].multiply_add(x, y[j], out);
}

VInnerProduct::VInnerProduct(const SparseMatrix& s) : s_(s) {
  llt_.compute(s_);
  if (llt_.info() != Eigen::Success) throw NumericalFailure("V-inner-product matrix is not SPD");
}

double VInnerProduct::inner(const Vector& a, const Vector& b) const { return a.dot(s_ * b); }

double VInnerProduct::norm(const Vector& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }

Vector VInnerProduct::riesz(const Vector& r) const { return llt_.solve(r); }

AffineOperator assemble(const Mesh& mesh, const AffineCoefficientModel& model, const LoadSpec& load) {
  check_alignment(mesh, model);
  const std::size_t d = model.dim();
  AffineOperator op;
  op.mesh = std::make_shared<const Mesh>(mesh);
  op.model = model;
  op.load_spec = load;
  op.inner = assemble_weighted(mesh, std::vector<double>(d, 1.0));
  op.a0 = op.inner * model.abar;

  std::vector<std::map<int, double>> parts(d);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const int cell = mesh.triangle_cell[t];
    const double amp = model.amplitudes[cell];
    const auto k = element_stiffness(element_geometry(mesh, tri));
    for (int a = 0; a < 3; ++a) {
      const int ra = mesh.dof_of_node[tri[a]];
      if (ra < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int cb = mesh.dof_of_node[tri[b]];
        if (cb < 0) continue;
        parts[cell][value_position(op.a0, ra, cb)] += amp * k[a][b];
      }
    }
  }
  // Recover (row, col) of every stored value once.
  std::vector<int> row_of(op.a0.nonZeros()), col_of(op.a0.nonZeros());
  for (int c = 0; c < op.a0.outerSize(); ++c) {
    for (int p = op.a0.outerIndexPtr()[c]; p < op.a0.outerIndexPtr()[c + 1]; ++p) {
      row_of[p] = op.a0.innerIndexPtr()[p];
      col_of[p] = c;
    }
  }
  op.components.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto& comp = op.components[j];
    for (const auto& [pos, val] : parts[j]) {
      comp.value_pos.push_back(pos);
      comp.rows.push_back(row_of[pos]);
      comp.cols.push_back(col_of[pos]);
      comp.values.push_back(val);
    }
  }

  op.load = Vector::Zero(static_cast<Eigen::Index>(mesh.num_dofs()));
  for (const auto& tri : mesh.triangles) {
    const auto g = element_geometry(mesh, tri);
    for (int a = 0; a < 3; ++a) {
      const int r = mesh.dof_of_node[tri[a]];
      if (r < 0) continue;
      if (load.kind == LoadSpec::Kind::Constant) {
        op.load[r] += load.value * g.area / 3.0;
        continue;
      }
      double acc = 0.0;
      for (const auto& q : reference_rule()) {
        double x = 0.0, y = 0.0;
        for (int i = 0; i < 3; ++i) {
          x += q.bary[i] * mesh.nodes[tri[i]][0];
          y += q.bary[i] * mesh.nodes[tri[i]][1];
        }
        const double f = 2.0 * std::numbers::pi * std::numbers::pi * std::sin(std::numbers::pi * x) *
                         std::sin(std::numbers::pi * y);
        acc += q.weight * f * q.bary[a];
      }
      op.load[r] += load.value * acc * 2.0 * g.area;
    }
  }
  op.vspace = std::make_shared<const VInnerProduct>(op.inner);
  return op;
}

SparseMatrix assemble_direct(const Mesh& mesh, const AffineCoefficientModel& model,
                             const ParameterVector& y) {
  check_alignment(mesh, model);
  if (y.size() != model.dim()) throw InvalidArgument("parameter dimension mismatch");
  std::vector<double> w(model.dim());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = model.abar + y[j] * model.amplitudes[j];
  return assemble_weighted(mesh, w);
}

Solver::Solver(std::shared_ptr<const AffineOperator> op, SolverOptions options)
    : op_(std::move(op)), options_(options), work_(op_->a0) {
  use_cg_ = op_->num_dofs() > options_.cg_threshold;
  if (!use_cg_) llt_.analyzePattern(work_);
}

Snapshot Solver::solve(const ParameterVector& y) {
  if (y.size() != op_->dim()) throw InvalidArgument("parameter dimension mismatch");
  return solve_raw(y.values());
}

Snapshot Solver::solve_raw(std::span<const double> y) {
  if (y.size() != op_->dim()) throw InvalidArgument("parameter dimension mismatch");
  const auto& a0 = op_->a0;
  std::copy(a0.valuePtr(), a0.valuePtr() + a0.nonZeros(), work_.valuePtr());
  double* v = work_.valuePtr();
  for (std::size_t j = 0; j < op_->components.size(); ++j) {
    const auto& c = op_->components[j];
    if (y[j] == 0.0) continue;
    for (std::size_t e = 0; e < c.values.size(); ++e) v[c.value_pos[e]] += y[j] * c.values[e];
  }
  Snapshot s;
  if (use_cg_) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options_.cg_tolerance);
    cg.setMaxIterations(options_.cg_max_iterations);
    cg.compute(work_);
    s.coeffs = cg.solve(op_->load);
    if (cg.info() != Eigen::Success) throw NumericalFailure("CG did not converge; A(y) may not be SPD");
  } else {
    llt_.factorize(work_);
    if (llt_.info() != Eigen::Success) throw NumericalFailure("A(y) is not positive definite");
    s.coeffs = llt_.solve(op_->load);
  }
  s.vnorm = op_->vspace->norm(s.coeffs);
  ++solves_;
  return s;
}

Snapshot solve(const std::shared_ptr<const AffineOperator>& op, const ParameterVector& y) {
  Solver solver(op);
  return solver.solve(y);
}

double v_inner(const Vector& a, const Vector& b, const SparseMatrix& s) {
  if (a.size() != b.size() || a.size() != s.rows()) {
    throw InvalidArgument("v_inner: dimension mismatch");
  }
  return a.dot(s * b);
}

double v_inner(const Snapshot& a, const Snapshot& b, const SparseMatrix& s) {
  return v_inner(a.coeffs, b.coeffs, s);
}

double riesz_residual_norm(const AffineOperator& op, const ParameterVector& y, const Vector& v) {
  if (v.size() != static_cast<Eigen::Index>(op.num_dofs())) {
    throw InvalidArgument("riesz_residual_norm: dimension mismatch");
  }
  Vector av;
  op.apply(y.values(), v, av);
  const Vector r = op.load - av;
  const Vector z = op.vspace->riesz(r);
  return op.vspace->norm(z);
}

double riesz_residual_norm(const AffineOperator& op, const ParameterVector& y, const Snapshot& v) {
  return riesz_residual_norm(op, y, v.coeffs);
}

DiscretizationErrors discretization_errors(
    const Mesh& mesh, const Vector& uh, const std::function<double(double, double)>& u,
    const std::function<std::array<double, 2>(double, double)>& grad_u) {
  if (uh.size() != static_cast<Eigen::Index>(mesh.num_dofs())) {
    throw InvalidArgument("discretization_errors: dimension mismatch");
  }
  double l2 = 0.0, h1 = 0.0;
  for (const auto& tri : mesh.triangles) {
    const auto g = element_geometry(mesh, tri);
    std::array<double, 3> vals{};
    std::array<double, 2> grad_h{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      const int r = mesh.dof_of_node[tri[i]];
      vals[i] = r < 0 ? 0.0 : uh[r];
      grad_h[0] += vals[i] * g.grad[i][0];
      grad_h[1] += vals[i] * g.grad[i][1];
    }
    for (const auto& q : reference_rule()) {
      double x = 0.0, y = 0.0, val = 0.0;
      for (int i = 0; i < 3; ++i) {
        x += q.bary[i] * mesh.nodes[tri[i]][0];
        y += q.bary[i] * mesh.nodes[tri[i]][1];
        val += q.bary[i] * vals[i];
      }
      const double w = q.weight * 2.0 * g.area;
      const double e = u(x, y) - val;
      const auto gu = grad_u(x, y);
      const double e0 = gu[0] - grad_h[0];
      const double e1 = gu[1] - grad_h[1];
      l2 += w * e * e;
      h1 += w * (e0 * e0 + e1 * e1);
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

}  // namespace rbg
