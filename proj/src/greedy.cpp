#include "rbgreedy/greedy.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <unistd.h>

#include "rbgreedy/errors.hpp"

namespace rbg {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- ReducedBasis

ReducedBasis::ReducedBasis(std::shared_ptr<const AffineOperator> op) : op_(std::move(op)) {
  if (!op_) throw InvalidArgument("ReducedBasis needs an operator");
  reduced_a0_.resize(0, 0);
  reduced_components_.assign(op_->dim(), DenseMatrix(0, 0));
  reduced_load_.resize(0);
}

void ReducedBasis::extend(const Snapshot& u, const ParameterVector& y) {
  if (u.coeffs.size() != static_cast<Eigen::Index>(num_dofs())) {
    throw InvalidArgument("extend: snapshot dimension mismatch");
  }
  const SparseMatrix& s = op_->inner;
  Vector r = u.coeffs;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < basis_.size(); ++i) r -= s_basis_[i].dot(r) * basis_[i];
  }
  Vector sr = s * r;
  const double rnorm = std::sqrt(std::max(0.0, r.dot(sr)));
  const double unorm = op_->vspace->norm(u.coeffs);
  if (!(rnorm > kBreakdownTolerance * unorm)) {
    throw BreakdownError("snapshot is numerically in the span of the reduced basis (residual " +
                         std::to_string(rnorm) + ")");
  }
  r /= rnorm;
  sr /= rnorm;

  const auto n = static_cast<Eigen::Index>(basis_.size());
  auto grow = [&](DenseMatrix& m, const Vector& w) {
    m.conservativeResize(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = basis_[static_cast<std::size_t>(i)].dot(w);
      m(i, n) = v;
      m(n, i) = v;
    }
    m(n, n) = r.dot(w);
  };
  Vector w = op_->a0 * r;
  grow(reduced_a0_, w);
  for (std::size_t j = 0; j < op_->components.size(); ++j) {
    w.setZero();
    op_->components[j].multiply_add(r, 1.0, w);
    grow(reduced_components_[j], w);
  }
  reduced_load_.conservativeResize(n + 1);
  reduced_load_[n] = op_->load.dot(r);

  basis_.push_back(std::move(r));
  s_basis_.push_back(std::move(sr));
  provenance_.push_back(y);
}

DenseMatrix ReducedBasis::gram() const {
  const auto n = static_cast<Eigen::Index>(size());
  DenseMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector si = op_->inner * basis_[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = basis_[static_cast<std::size_t>(j)].dot(si);
  }
  return g;
}

DenseMatrix ReducedBasis::reduced_matrix(std::span<const double> y) const {
  if (y.size() != reduced_components_.size()) throw InvalidArgument("parameter dimension mismatch");
  DenseMatrix m = reduced_a0_;
  for (std::size_t j = 0; j < y.size(); ++j)
    if (y[j] != 0.0) m.noalias() += y[j] * reduced_components_[j];
  return m;
}

ReducedBasis ReducedBasis::from_parts(std::shared_ptr<const AffineOperator> op, std::vector<Vector> basis,
                                      DenseMatrix reduced_a0, std::vector<DenseMatrix> reduced_components,
                                      Vector reduced_load, std::vector<ParameterVector> provenance) {
  ReducedBasis rb(std::move(op));
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (reduced_a0.rows() != n || reduced_a0.cols() != n || reduced_load.size() != n ||
      provenance.size() != basis.size() || reduced_components.size() != rb.op_->dim()) {
    throw InvalidArgument("inconsistent reduced basis parts");
  }
  for (const auto& b : basis) {
    if (b.size() != static_cast<Eigen::Index>(rb.num_dofs())) {
      throw InvalidArgument("basis vector dimension mismatch");
    }
    rb.s_basis_.push_back(rb.op_->inner * b);
  }
  rb.basis_ = std::move(basis);
  rb.reduced_a0_ = std::move(reduced_a0);
  rb.reduced_components_ = std::move(reduced_components);
  rb.reduced_load_ = std::move(reduced_load);
  rb.provenance_ = std::move(provenance);
  return rb;
}

double project_error(const Vector& u, const ReducedBasis& rb) {
  if (!rb.op() || u.size() != static_cast<Eigen::Index>(rb.num_dofs())) {
    throw InvalidArgument("project_error: dimension mismatch");
  }
  Vector r = u;
  const auto& b = rb.vectors();
  const auto& sb = rb.s_vectors();
  for (std::size_t i = 0; i < b.size(); ++i) r -= sb[i].dot(u) * b[i];
  return std::sqrt(std::max(0.0, r.dot(rb.op()->inner * r)));
}

double project_error(const Snapshot& u, const ReducedBasis& rb) { return project_error(u.coeffs, rb); }

ReducedBasis extend(ReducedBasis rb, const Snapshot& u, const ParameterVector& y) {
  rb.extend(u, y);
  return rb;
}

// ---------------------------------------------------------------- enums

Selector parse_selector(std::string_view s) {
  if (s == "exact") return Selector::Exact;
  if (s == "residual") return Selector::Residual;
  throw InvalidArgument("unknown selector '" + std::string(s) + "'");
}

PoolMode parse_pool_mode(std::string_view s) {
  if (s == "fresh") return PoolMode::Fresh;
  if (s == "cumulative") return PoolMode::Cumulative;
  throw InvalidArgument("unknown pool mode '" + std::string(s) + "'");
}

std::string_view to_string(Selector s) { return s == Selector::Exact ? "exact" : "residual"; }
std::string_view to_string(PoolMode p) { return p == PoolMode::Fresh ? "fresh" : "cumulative"; }

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::HitTolerance: return "HitTolerance";
    case Termination::HitStepCap: return "HitStepCap";
    case Termination::HitScheduleEnd: return "HitScheduleEnd";
  }
  return "?";
}

// ---------------------------------------------------------------- Evaluator

Evaluator::Evaluator(std::shared_ptr<const AffineOperator> op, int threads, SolverOptions options)
    : op_(std::move(op)) {
  if (threads < 1) threads = 1;
  solvers_.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) solvers_.push_back(std::make_unique<Solver>(op_, options));
}

std::size_t Evaluator::solve_count() const {
  std::size_t n = 0;
  for (const auto& s : solvers_) n += s->solve_count();
  return n;
}

// ---------------------------------------------------------------- validation

struct ValidationSet::SpillFile {
  std::filesystem::path path;
  ~SpillFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

ValidationSet ValidationSet::build(std::vector<ParameterVector> points, Evaluator& evaluator,
                                   std::size_t memory_cap_bytes, const std::filesystem::path& spill_dir) {
  ValidationSet vs;
  vs.points_ = std::move(points);
  vs.num_dofs_ = evaluator.op()->num_dofs();
  const std::size_t count = vs.points_.size();
  vs.norms_sq_.resize(count);
  const std::size_t column_bytes = vs.num_dofs_ * sizeof(double);
  const bool spill = count * column_bytes > memory_cap_bytes;
  vs.block_columns_ = spill ? std::max<std::size_t>(1, memory_cap_bytes / column_bytes) : count;

  auto solve_columns = [&](std::size_t first, std::size_t n, DenseMatrix& out) {
    out.resize(static_cast<Eigen::Index>(vs.num_dofs_), static_cast<Eigen::Index>(n));
    evaluator.parallel_for(n, [&](int t, std::size_t i) {
      const Snapshot s = evaluator.solver(t).solve(vs.points_[first + i]);
      out.col(static_cast<Eigen::Index>(i)) = s.coeffs;
      vs.norms_sq_[first + i] = s.vnorm * s.vnorm;
    });
  };

  if (!spill) {
    solve_columns(0, count, vs.in_memory_);
    return vs;
  }
  static std::atomic<unsigned> counter{0};
  auto owner = std::make_shared<SpillFile>();
  owner->path = spill_dir / ("rbg_validation_" + std::to_string(::getpid()) + "_" +
                             std::to_string(counter++) + ".bin");
  std::ofstream out(owner->path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot create validation spill file " + owner->path.string());
  DenseMatrix block;
  for (std::size_t first = 0; first < count; first += vs.block_columns_) {
    const std::size_t n = std::min(vs.block_columns_, count - first);
    solve_columns(first, n, block);
    out.write(reinterpret_cast<const char*>(block.data()),
              static_cast<std::streamsize>(block.size() * sizeof(double)));
  }
  out.close();
  if (!out) throw std::runtime_error("failed writing validation spill file " + owner->path.string());
  vs.spill_file_ = owner->path;
  vs.spill_owner_ = std::move(owner);
  return vs;
}

void ValidationSet::read_block(std::size_t first, std::size_t count, DenseMatrix& out) const {
  std::ifstream in(spill_file_, std::ios::binary);
  in.seekg(static_cast<std::streamoff>(first * num_dofs_ * sizeof(double)));
  out.resize(static_cast<Eigen::Index>(num_dofs_), static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * sizeof(double)));
  if (!in) throw std::runtime_error("failed reading validation spill file " + spill_file_.string());
}

ValidationTracker::ValidationTracker(const ValidationSet& set)
    : set_(&set), captured_sq_(set.size(), 0.0) {}

void ValidationTracker::update(const ReducedBasis& rb) {
  if (rb.size() < processed_) throw InvalidArgument("validation tracker needs nested bases");
  const std::size_t fresh = rb.size() - processed_;
  if (fresh == 0) return;
  DenseMatrix sb(static_cast<Eigen::Index>(set_->num_dofs()), static_cast<Eigen::Index>(fresh));
  for (std::size_t i = 0; i < fresh; ++i) sb.col(static_cast<Eigen::Index>(i)) = rb.s_vectors()[processed_ + i];
  set_->for_each_block([&](std::size_t first, const DenseMatrix& block) {
    const DenseMatrix c = block.transpose() * sb;
    for (Eigen::Index i = 0; i < c.rows(); ++i) captured_sq_[first + static_cast<std::size_t>(i)] += c.row(i).squaredNorm();
  });
  processed_ = rb.size();
}

std::vector<double> ValidationTracker::errors() const {
  std::vector<double> e(captured_sq_.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::sqrt(std::max(0.0, set_->norms_sq()[i] - captured_sq_[i]));
  return e;
}

double ValidationTracker::max_error() const {
  double m = 0.0;
  for (double e : errors()) m = std::max(m, e);
  return m;
}

double estimate_true_error(const ReducedBasis& rb, const ValidationSet& validation) {
  ValidationTracker tracker(validation);
  tracker.update(rb);
  return tracker.max_error();
}

// ---------------------------------------------------------------- selection

namespace {

struct Candidate {
  double value = -1.0;
  std::size_t index = std::numeric_limits<std::size_t>::max();
  Snapshot snapshot;

  bool beaten_by(double v, std::size_t i) const { return v > value || (v == value && i < index); }
};

Candidate merge(std::vector<Candidate>& parts) {
  Candidate best;
  for (auto& c : parts)
    if (c.index != std::numeric_limits<std::size_t>::max() && best.beaten_by(c.value, c.index)) best = std::move(c);
  return best;
}

}  // namespace

StepResult greedy_step(const ReducedBasis& rb, std::span<const ParameterVector> training_set,
                       Evaluator& evaluator, Selector selector) {
  if (training_set.empty()) throw InvalidArgument("greedy_step: empty training set");
  std::vector<Candidate> best(static_cast<std::size_t>(evaluator.threads()));
  StepResult out;

  if (selector == Selector::Residual && !rb.empty()) {
    evaluator.parallel_for(training_set.size(), [&](int t, std::size_t i) {
      const auto lifted = online_solve(rb, training_set[i], true).lifted;
      const double v = riesz_residual_norm(*evaluator.op(), training_set[i], *lifted);
      auto& b = best[static_cast<std::size_t>(t)];
      if (b.beaten_by(v, i)) {
        b.value = v;
        b.index = i;
      }
    });
    Candidate c = merge(best);
    out.index = c.index;
    out.surrogate = c.value;
    out.snapshot = evaluator.solver(0).solve(training_set[c.index]);
    out.sigma_hat = project_error(out.snapshot, rb);
  } else {
    evaluator.parallel_for(training_set.size(), [&](int t, std::size_t i) {
      Snapshot s = evaluator.solver(t).solve(training_set[i]);
      const double e = rb.empty() ? s.vnorm : project_error(s, rb);
      auto& b = best[static_cast<std::size_t>(t)];
      if (b.beaten_by(e, i)) {
        b.value = e;
        b.index = i;
        b.snapshot = std::move(s);
      }
    });
    Candidate c = merge(best);
    out.index = c.index;
    out.sigma_hat = c.value;
    out.snapshot = std::move(c.snapshot);
  }
  out.y_star = training_set[out.index];
  return out;
}

StepResult greedy_step_cached(const ReducedBasis& rb, std::span<const ParameterVector> points,
                              std::span<const Snapshot> snapshots) {
  if (points.empty() || points.size() != snapshots.size()) {
    throw InvalidArgument("greedy_step_cached: empty or mismatched training set");
  }
  Candidate best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double e = rb.empty() ? snapshots[i].vnorm : project_error(snapshots[i], rb);
    if (best.beaten_by(e, i)) {
      best.value = e;
      best.index = i;
    }
  }
  StepResult out;
  out.index = best.index;
  out.sigma_hat = best.value;
  out.y_star = points[best.index];
  out.snapshot = snapshots[best.index];
  return out;
}

// ---------------------------------------------------------------- drivers

long long schedule_size(int n, double beta) {
  if (n < 1 || !(beta >= 1.0)) throw InvalidArgument("schedule needs n >= 1 and beta >= 1");
  const double x = std::pow(static_cast<double>(n), beta);
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * x) return static_cast<long long>(r);
  return static_cast<long long>(std::floor(x));
}

namespace {

class RunRecorder {
 public:
  RunRecorder(GreedyResult& result, const ValidationSet* validation) : result_(result) {
    if (validation) {
      tracker_.emplace(*validation);
      previous_val_ = tracker_->max_error();
    }
  }

  StepRecord& begin(int step, long long n_train, const StepResult& sr) {
    auto& rec = result_.trace.steps.emplace_back();
    rec.step = step;
    rec.n_train = n_train;
    rec.chosen_index = sr.index;
    rec.chosen_y = sr.y_star;
    rec.sigma_hat = sr.sigma_hat;
    rec.surrogate = sr.surrogate;
    if (previous_val_ && *previous_val_ > 0.0) rec.gamma_hat = sr.sigma_hat / *previous_val_;
    result_.trace.evaluations += n_train;
    return rec;
  }

  void after_extension(StepRecord& rec) {
    rec.extended = true;
    if (tracker_) {
      tracker_->update(result_.basis);
      rec.sigma_val = tracker_->max_error();
      previous_val_ = rec.sigma_val;
    }
  }

 private:
  GreedyResult& result_;
  std::optional<ValidationTracker> tracker_;
  std::optional<double> previous_val_;
};

void check_validation(const ValidationSet* validation, const Evaluator& evaluator) {
  if (validation && validation->num_dofs() != evaluator.op()->num_dofs()) {
    throw InvalidArgument("validation set was built on a different discretization");
  }
}

}  // namespace

GreedyResult run_certified(const CertifiedBudget& budget, Evaluator& evaluator, const RandomStream& rng,
                           const ValidationSet* validation, const GreedyOptions& options) {
  check_validation(validation, evaluator);
  if (budget.m < 1 || budget.n_train < 1) throw InvalidArgument("run_certified: invalid budget");
  if (budget.n_train > options.max_training_size) {
    throw ResourceError("certified budget needs N=" + std::to_string(budget.n_train) +
                            " error evaluations per step (m=" + std::to_string(budget.m) +
                            "), above the limit " + std::to_string(options.max_training_size),
                        budget.m, budget.n_train);
  }
  const auto t0 = std::chrono::steady_clock::now();
  GreedyResult result{ReducedBasis(evaluator.op()), {}};
  result.trace.seed = rng.seed();
  result.trace.budget = budget;
  RunRecorder recorder(result, validation);
  const long long cap = budget.step_cap();
  const double tol = budget.tolerance();
  const std::size_t d = evaluator.op()->dim();

  result.trace.termination = Termination::HitStepCap;
  for (int step = 1;; ++step) {
    const auto ts = std::chrono::steady_clock::now();
    RandomStream step_rng = rng.split("train/step", static_cast<std::uint64_t>(step));
    const auto training = sample_set(budget.measure, d, static_cast<std::size_t>(budget.n_train), step_rng);
    StepResult sr = greedy_step(result.basis, training, evaluator, options.selector);
    StepRecord& rec = recorder.begin(step, budget.n_train, sr);
    if (sr.sigma_hat <= tol) {
      rec.wall_time = seconds_since(ts);
      result.trace.termination = Termination::HitTolerance;
      break;
    }
    result.basis.extend(sr.snapshot, sr.y_star);
    recorder.after_extension(rec);
    rec.wall_time = seconds_since(ts);
    if (static_cast<long long>(result.basis.size()) >= cap) break;
  }
  result.trace.total_wall_time = seconds_since(t0);
  return result;
}

GreedyResult run_scheduled(int n_max, double beta, SamplingMeasure measure, Evaluator& evaluator,
                           const RandomStream& rng, const ValidationSet* validation,
                           const GreedyOptions& options) {
  if (n_max < 1) throw InvalidArgument("run_scheduled needs n_max >= 1");
  if (!(beta >= 1.0)) throw InvalidArgument("run_scheduled needs beta >= 1");
  check_validation(validation, evaluator);
  const auto t0 = std::chrono::steady_clock::now();
  GreedyResult result{ReducedBasis(evaluator.op()), {}};
  result.trace.seed = rng.seed();
  RunRecorder recorder(result, validation);
  const std::size_t d = evaluator.op()->dim();

  std::vector<ParameterVector> pool;
  std::vector<Snapshot> pool_snapshots;
  RandomStream pool_rng = rng.split("train/pool");

  for (int n = 1; n <= n_max; ++n) {
    const auto ts = std::chrono::steady_clock::now();
    const long long count = schedule_size(n, beta);
    StepResult sr;
    if (options.pool_mode == PoolMode::Fresh) {
      RandomStream step_rng = rng.split("train/step", static_cast<std::uint64_t>(n));
      const auto training = sample_set(measure, d, static_cast<std::size_t>(count), step_rng);
      sr = greedy_step(result.basis, training, evaluator, options.selector);
    } else {
      const std::size_t first = pool.size();
      while (pool.size() < static_cast<std::size_t>(count)) pool.push_back(sample(measure, d, pool_rng));
      pool_snapshots.resize(pool.size());
      evaluator.parallel_for(pool.size() - first, [&](int t, std::size_t i) {
        pool_snapshots[first + i] = evaluator.solver(t).solve(pool[first + i]);
      });
      sr = greedy_step_cached(result.basis, pool, pool_snapshots);
    }
    StepRecord* rec = &recorder.begin(n, count, sr);
    try {
      result.basis.extend(sr.snapshot, sr.y_star);
    } catch (const BreakdownError&) {
      // One retry with a fresh, independent draw; a second breakdown aborts.
      ++result.trace.breakdown_retries;
      RandomStream retry_rng = rng.split("train/retry", static_cast<std::uint64_t>(n));
      const auto training = sample_set(measure, d, static_cast<std::size_t>(count), retry_rng);
      sr = greedy_step(result.basis, training, evaluator, options.selector);
      result.trace.evaluations += count;
      rec->chosen_index = sr.index;
      rec->chosen_y = sr.y_star;
      rec->sigma_hat = sr.sigma_hat;
      rec->surrogate = sr.surrogate;
      result.basis.extend(sr.snapshot, sr.y_star);
    }
    recorder.after_extension(*rec);
    rec->wall_time = seconds_since(ts);
  }
  result.trace.termination = Termination::HitScheduleEnd;
  result.trace.total_wall_time = seconds_since(t0);
  return result;
}

GreedyResult run_fixed_pool(int n_max, std::span<const ParameterVector> pool, Evaluator& evaluator,
                            const ValidationSet* validation) {
  if (n_max < 1 || pool.empty()) throw InvalidArgument("run_fixed_pool needs n_max >= 1 and a pool");
  check_validation(validation, evaluator);
  const auto t0 = std::chrono::steady_clock::now();
  GreedyResult result{ReducedBasis(evaluator.op()), {}};
  RunRecorder recorder(result, validation);
  std::vector<Snapshot> snapshots(pool.size());
  evaluator.parallel_for(pool.size(), [&](int t, std::size_t i) { snapshots[i] = evaluator.solver(t).solve(pool[i]); });
  for (int n = 1; n <= n_max; ++n) {
    const auto ts = std::chrono::steady_clock::now();
    StepResult sr = greedy_step_cached(result.basis, pool, snapshots);
    StepRecord& rec = recorder.begin(n, static_cast<long long>(pool.size()), sr);
    result.basis.extend(sr.snapshot, sr.y_star);
    recorder.after_extension(rec);
    rec.wall_time = seconds_since(ts);
  }
  result.trace.termination = Termination::HitScheduleEnd;
  result.trace.total_wall_time = seconds_since(t0);
  return result;
}

OnlineSolution online_solve(const ReducedBasis& rb, const ParameterVector& y, bool lift) {
  if (y.size() != rb.param_dim()) throw InvalidArgument("online_solve: parameter dimension mismatch");
  OnlineSolution out;
  if (rb.empty()) {
    out.coeffs.resize(0);
  } else {
    const DenseMatrix m = rb.reduced_matrix(y.values());
    Eigen::LLT<DenseMatrix> llt(m);
    if (llt.info() != Eigen::Success) throw NumericalFailure("reduced system is not positive definite");
    out.coeffs = llt.solve(rb.reduced_load());
  }
  if (lift) {
    Vector u = Vector::Zero(static_cast<Eigen::Index>(rb.num_dofs()));
    for (std::size_t i = 0; i < rb.size(); ++i) u += out.coeffs[static_cast<Eigen::Index>(i)] * rb.vectors()[i];
    out.lifted = std::move(u);
  }
  return out;
}

}  // namespace rbg
