#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <exception>
#include <thread>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbgreedy/fem.hpp"
#include "rbgreedy/params.hpp"
#include "rbgreedy/polytools.hpp"
#include "rbgreedy/random.hpp"

namespace rbg {

using DenseMatrix = Eigen::MatrixXd;

/// V-orthonormal basis of V_n together with the Galerkin-projected affine
/// operator, so that online solves never touch the high-fidelity space.
class ReducedBasis {
 public:
  ReducedBasis() = default;
  explicit ReducedBasis(std::shared_ptr<const AffineOperator> op);

  std::size_t size() const { return basis_.size(); }
  bool empty() const { return basis_.empty(); }
  std::size_t num_dofs() const { return op_ ? op_->num_dofs() : 0; }
  std::size_t param_dim() const { return op_ ? op_->dim() : 0; }

  const std::vector<Vector>& vectors() const { return basis_; }
  /// S b_i for every basis vector.
  const std::vector<Vector>& s_vectors() const { return s_basis_; }
  const DenseMatrix& reduced_a0() const { return reduced_a0_; }
  const std::vector<DenseMatrix>& reduced_components() const { return reduced_components_; }
  const Vector& reduced_load() const { return reduced_load_; }
  const std::vector<ParameterVector>& provenance() const { return provenance_; }
  const std::shared_ptr<const AffineOperator>& op() const { return op_; }

  /// Appends the V-normalized component of u orthogonal to V_n (modified
  /// Gram-Schmidt, two passes) and updates the reduced operators.
  /// Throws BreakdownError if that component is below 1e-12 ||u||_V.
  void extend(const Snapshot& u, const ParameterVector& y);

  /// Gram matrix of the basis in the V inner product (recomputed).
  DenseMatrix gram() const;
  /// n x n matrix of the reduced operator at parameter values y.
  DenseMatrix reduced_matrix(std::span<const double> y) const;

  /// Rebuilds a basis from stored arrays (used by load_basis). Reduced
  /// operators are taken as given, not recomputed.
  static ReducedBasis from_parts(std::shared_ptr<const AffineOperator> op, std::vector<Vector> basis,
                                 DenseMatrix reduced_a0, std::vector<DenseMatrix> reduced_components,
                                 Vector reduced_load, std::vector<ParameterVector> provenance);

 private:
  std::shared_ptr<const AffineOperator> op_;
  std::vector<Vector> basis_;
  std::vector<Vector> s_basis_;
  DenseMatrix reduced_a0_;
  std::vector<DenseMatrix> reduced_components_;
  Vector reduced_load_;
  std::vector<ParameterVector> provenance_;
};

constexpr double kBreakdownTolerance = 1e-12;

/// e_n = ||u - P_{V_n} u||_V, computed from the explicit residual vector.
double project_error(const Vector& u, const ReducedBasis& rb);
double project_error(const Snapshot& u, const ReducedBasis& rb);

ReducedBasis extend(ReducedBasis rb, const Snapshot& u, const ParameterVector& y);

enum class Selector { Exact, Residual };
enum class PoolMode { Fresh, Cumulative };
enum class Termination { HitTolerance, HitStepCap, HitScheduleEnd };

Selector parse_selector(std::string_view s);
PoolMode parse_pool_mode(std::string_view s);
std::string_view to_string(Selector s);
std::string_view to_string(PoolMode p);
std::string_view to_string(Termination t);

/// High-fidelity solves spread over worker threads, one Solver per thread.
class Evaluator {
 public:
  Evaluator(std::shared_ptr<const AffineOperator> op, int threads = 1, SolverOptions options = {});

  const std::shared_ptr<const AffineOperator>& op() const { return op_; }
  int threads() const { return static_cast<int>(solvers_.size()); }
  Solver& solver(int thread) { return *solvers_[static_cast<std::size_t>(thread)]; }
  std::size_t solve_count() const;

  /// Runs body(thread, i) for i in [0, count) with a static block partition.
  template <class Body>
  void parallel_for(std::size_t count, Body&& body);

 private:
  std::shared_ptr<const AffineOperator> op_;
  std::vector<std::unique_ptr<Solver>> solvers_;
};

/// Fixed set of held-out parameters whose snapshots are solved once. Snapshots
/// live in memory, or in a scratch file when they exceed the memory cap.
class ValidationSet {
 public:
  ValidationSet() = default;
  static ValidationSet build(std::vector<ParameterVector> points, Evaluator& evaluator,
                             std::size_t memory_cap_bytes = std::size_t{1} << 31,
                             const std::filesystem::path& spill_dir = std::filesystem::temp_directory_path());

  std::size_t size() const { return points_.size(); }
  std::size_t num_dofs() const { return num_dofs_; }
  bool spilled() const { return !spill_file_.empty(); }
  const std::vector<ParameterVector>& points() const { return points_; }
  /// ||u(y)||_V^2 for every point.
  const std::vector<double>& norms_sq() const { return norms_sq_; }

  /// Calls fn(first_index, block) with blocks of snapshots stored as columns.
  template <class Fn>
  void for_each_block(Fn&& fn) const;

 private:
  struct SpillFile;
  std::vector<ParameterVector> points_;
  std::vector<double> norms_sq_;
  std::size_t num_dofs_ = 0;
  DenseMatrix in_memory_;
  std::filesystem::path spill_file_;
  std::shared_ptr<SpillFile> spill_owner_;
  std::size_t block_columns_ = 0;

  void read_block(std::size_t first, std::size_t count, DenseMatrix& out) const;
};

/// Per-run projection state against a shared ValidationSet. e_n(y)^2 is kept
/// as ||u||^2 - sum_i <u, b_i>_V^2 and updated only for new basis vectors.
class ValidationTracker {
 public:
  explicit ValidationTracker(const ValidationSet& set);

  void update(const ReducedBasis& rb);
  std::vector<double> errors() const;
  double max_error() const;

 private:
  const ValidationSet* set_;
  std::vector<double> captured_sq_;
  std::size_t processed_ = 0;
};

/// max over the validation set of e_n, recomputed from scratch.
double estimate_true_error(const ReducedBasis& rb, const ValidationSet& validation);

struct StepResult {
  std::size_t index = 0;
  ParameterVector y_star;
  /// Exact e_n(y_star).
  double sigma_hat = 0.0;
  /// Largest residual surrogate value when the residual selector is used.
  std::optional<double> surrogate;
  Snapshot snapshot;
};

/// Argmax of e_n over the training set (ties go to the smallest index). With
/// an empty basis this maximizes ||u(y)||_V.
StepResult greedy_step(const ReducedBasis& rb, std::span<const ParameterVector> training_set,
                       Evaluator& evaluator, Selector selector = Selector::Exact);

/// Same selection over a set whose snapshots are already solved.
StepResult greedy_step_cached(const ReducedBasis& rb, std::span<const ParameterVector> points,
                              std::span<const Snapshot> snapshots);

struct StepRecord {
  int step = 0;                // 1-based; selection uses V_{step-1}
  long long n_train = 0;
  std::size_t chosen_index = 0;
  ParameterVector chosen_y;
  double sigma_hat = 0.0;
  std::optional<double> surrogate;
  bool extended = false;
  /// Validation max of e after this step's extension.
  std::optional<double> sigma_val;
  /// sigma_hat over the validation max for V_{step-1}: empirical weak-greedy ratio.
  std::optional<double> gamma_hat;
  double wall_time = 0.0;
};

struct GreedyTrace {
  std::vector<StepRecord> steps;
  Termination termination = Termination::HitScheduleEnd;
  std::uint64_t seed = 0;
  long long evaluations = 0;
  int breakdown_retries = 0;
  std::optional<CertifiedBudget> budget;
  double total_wall_time = 0.0;
};

struct GreedyOptions {
  Selector selector = Selector::Exact;
  PoolMode pool_mode = PoolMode::Fresh;
  /// Certified runs refuse training sets larger than this.
  long long max_training_size = 100'000'000;
};

struct GreedyResult {
  ReducedBasis basis;
  GreedyTrace trace;
};

/// floor(n^beta), exact for integral powers.
long long schedule_size(int n, double beta);

GreedyResult run_certified(const CertifiedBudget& budget, Evaluator& evaluator, const RandomStream& rng,
                           const ValidationSet* validation = nullptr, const GreedyOptions& options = {});

GreedyResult run_scheduled(int n_max, double beta, SamplingMeasure measure, Evaluator& evaluator,
                           const RandomStream& rng, const ValidationSet* validation = nullptr,
                           const GreedyOptions& options = {});

/// Greedy over one fixed pool of parameters whose snapshots are solved once.
GreedyResult run_fixed_pool(int n_max, std::span<const ParameterVector> pool, Evaluator& evaluator,
                            const ValidationSet* validation = nullptr);

struct OnlineSolution {
  Vector coeffs;
  std::optional<Vector> lifted;
};

/// Solves (A0_n + sum_j y_j A_j,n) c = f_n; cost independent of n_h.
OnlineSolution online_solve(const ReducedBasis& rb, const ParameterVector& y, bool lift = false);

// ---------------------------------------------------------------------------

template <class Body>
void Evaluator::parallel_for(std::size_t count, Body&& body) {
  const std::size_t t = solvers_.size();
  if (t <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(0, i);
    return;
  }
  std::vector<std::exception_ptr> errors(t);
  {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < t; ++w) {
      workers.emplace_back([&, w] {
        const std::size_t lo = count * w / t, hi = count * (w + 1) / t;
        try {
          for (std::size_t i = lo; i < hi; ++i) body(static_cast<int>(w), i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <class Fn>
void ValidationSet::for_each_block(Fn&& fn) const {
  if (!spilled()) {
    fn(std::size_t{0}, static_cast<const DenseMatrix&>(in_memory_));
    return;
  }
  DenseMatrix block;
  for (std::size_t first = 0; first < size(); first += block_columns_) {
    const std::size_t count = std::min(block_columns_, size() - first);
    read_block(first, count, block);
    fn(first, static_cast<const DenseMatrix&>(block));
  }
}

}  // namespace rbg
