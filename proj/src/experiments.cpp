#include "rbgreedy/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rbgreedy/basis_io.hpp"
#include "rbgreedy/errors.hpp"

namespace rbg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string beta_tag(double beta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", beta);
  return buf;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument("invalid configuration: " + what);
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Scheduled: return "scheduled";
    case Mode::Certified: return "certified";
    case Mode::LemmaMC: return "lemma-mc";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  require(k >= 1, "k must be >= 1");
  require(t > 0.0, "t must be > 0");
  require(delta > 0.0, "delta must be > 0");
  require(grid_n >= 2 && grid_n % k == 0, "grid-n must be >= 2 and a multiple of k");
  for (double b : beta_list) require(b >= 1.0, "every beta must be >= 1");
  require(n_max >= 1, "n-max must be >= 1");
  require(realizations >= 1, "realizations must be >= 1");
  require(validation_size >= 1, "validation-size must be >= 1");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(eta > 0.0 && eta < 1.0, "eta must lie in (0,1)");
  require(r > 0.0, "r must be > 0");
  require(m0 > 0.0, "m0 must be > 0");
  require(max_training_size >= 1, "max-training-size must be >= 1");
  require(lemma_instances >= 1 && lemma_trials >= 1 && lemma_trial_m_max >= 1 && lemma_m_max >= 1 &&
              lemma_d_max >= 1 && lemma_mc_samples >= 1,
          "lemma campaign sizes must be >= 1");
  for (double e : lemma_eta_list) require(e > 0.0 && e < 1.0, "lemma etas must lie in (0,1)");
  require(threads >= 1, "threads must be >= 1");
  require(cache_mb >= 1, "cache-mb must be >= 1");
}

json ExperimentConfig::to_json() const {
  return json{{"mode", to_string(mode)},
              {"k", k},
              {"d", k * k},
              {"t", t},
              {"delta", delta},
              {"grid_n", grid_n},
              {"measure", to_string(measure)},
              {"beta_list", beta_list},
              {"n_max", n_max},
              {"realizations", realizations},
              {"validation_size", validation_size},
              {"pool_mode", to_string(pool_mode)},
              {"selector", to_string(selector)},
              {"epsilon", epsilon},
              {"eta", eta},
              {"r", r},
              {"m0", m0},
              {"master_seed", master_seed}};
}

// ---------------------------------------------------------------- seeds

std::uint64_t training_seed(std::uint64_t master, double beta, int realization) {
  return derive_seed(master, "train/run", {real_label(beta), static_cast<std::uint64_t>(realization)});
}

std::uint64_t validation_seed(std::uint64_t master, int k, double t) {
  return derive_seed(master, "validation/set", {static_cast<std::uint64_t>(k), real_label(t)});
}

std::uint64_t certified_seed(std::uint64_t master, int run) {
  return derive_seed(master, "train/certified", {static_cast<std::uint64_t>(run)});
}

void assert_stream_separation(const ExperimentConfig& config) {
  std::set<std::uint64_t> training;
  for (double beta : config.beta_list)
    for (int r = 0; r < config.realizations; ++r) training.insert(training_seed(config.master_seed, beta, r));
  training.insert(certified_seed(config.master_seed, 0));
  if (training.count(validation_seed(config.master_seed, config.k, config.t)) != 0) {
    throw std::logic_error("validation stream collides with a training stream");
  }
}

// ---------------------------------------------------------------- curves

std::vector<CurveStats> ErrorCurves::stats() const {
  std::vector<CurveStats> out;
  for (double beta : betas) {
    for (int n = 1; n <= n_max; ++n) {
      CurveStats s{beta, n, 0.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
      int count = 0;
      for (const auto& row : rows) {
        if (row.beta != beta || row.n != n) continue;
        s.mean += row.sigma_val;
        s.min = std::min(s.min, row.sigma_val);
        s.max = std::max(s.max, row.sigma_val);
        ++count;
      }
      if (count == 0) continue;
      s.mean /= count;
      out.push_back(s);
    }
  }
  return out;
}

double ErrorCurves::mean_at(double beta, int n) const {
  for (const auto& s : stats())
    if (s.beta == beta && s.n == n) return s.mean;
  throw InvalidArgument("no curve data for beta=" + beta_tag(beta) + ", n=" + std::to_string(n));
}

void write_curves_csv(const ErrorCurves& curves, std::ostream& out) {
  out << kCurvesHeader << '\n';
  for (const auto& r : curves.rows) {
    out << fmt17(r.beta) << ',' << r.realization << ',' << r.n << ',' << r.n_train << ',' << fmt17(r.sigma_hat)
        << ',' << fmt17(r.sigma_val) << '\n';
  }
}

void write_curves_summary_csv(const ErrorCurves& curves, std::ostream& out) {
  out << "beta,n,mean,min,max\n";
  for (const auto& s : curves.stats()) {
    out << fmt17(s.beta) << ',' << s.n << ',' << fmt17(s.mean) << ',' << fmt17(s.min) << ',' << fmt17(s.max)
        << '\n';
  }
}

ErrorCurves read_curves_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCurvesHeader) {
    throw InvalidArgument("curves CSV must start with the header '" + std::string(kCurvesHeader) + "'");
  }
  ErrorCurves curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw InvalidArgument("malformed curves CSV row: " + line);
    CurveRow row;
    row.beta = std::stod(f[0]);
    row.realization = std::stoi(f[1]);
    row.n = std::stoi(f[2]);
    row.n_train = std::stoll(f[3]);
    row.sigma_hat = std::stod(f[4]);
    row.sigma_val = std::stod(f[5]);
    if (std::find(curves.betas.begin(), curves.betas.end(), row.beta) == curves.betas.end()) {
      curves.betas.push_back(row.beta);
    }
    curves.realizations = std::max(curves.realizations, row.realization + 1);
    curves.n_max = std::max(curves.n_max, row.n);
    curves.rows.push_back(row);
  }
  return curves;
}

ErrorCurves read_curves_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_curves_csv(in);
}

json trace_to_json(const GreedyTrace& trace, bool include_timing) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json j{{"step", s.step},
           {"n_train", s.n_train},
           {"chosen_index", s.chosen_index},
           {"chosen_y", std::vector<double>(s.chosen_y.values().begin(), s.chosen_y.values().end())},
           {"sigma_hat", s.sigma_hat},
           {"extended", s.extended}};
    j["sigma_val"] = s.sigma_val ? json(*s.sigma_val) : json(nullptr);
    j["gamma_hat"] = s.gamma_hat ? json(*s.gamma_hat) : json(nullptr);
    if (s.surrogate) j["surrogate"] = *s.surrogate;
    if (include_timing) j["wall_time"] = s.wall_time;
    steps.push_back(std::move(j));
  }
  json out{{"seed", trace.seed},
           {"termination", to_string(trace.termination)},
           {"evaluations", trace.evaluations},
           {"breakdown_retries", trace.breakdown_retries},
           {"steps", std::move(steps)}};
  if (trace.budget) {
    const auto& b = *trace.budget;
    out["budget"] = json{{"m", b.m},       {"N", b.n_train},           {"epsilon", b.epsilon},
                         {"eta", b.eta},   {"r", b.r},                 {"M0", b.m0},
                         {"alpha", b.alpha}, {"measure", to_string(b.measure)}, {"tolerance", b.tolerance()},
                         {"step_cap", b.step_cap()}};
  }
  if (include_timing) out["total_wall_time"] = trace.total_wall_time;
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create " + tmp.string());
    out << content;
    out.close();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------- scheduled sweep

namespace {

std::shared_ptr<const AffineOperator> build_operator(const ExperimentConfig& c) {
  const auto model = build_checkerboard_model(c.k, c.t, c.delta);
  return std::make_shared<const AffineOperator>(assemble(build_mesh(c.grid_n, c.k), model));
}

ValidationSet build_validation(const ExperimentConfig& c, Evaluator& evaluator) {
  RandomStream vrng(validation_seed(c.master_seed, c.k, c.t));
  auto points = sample_set(c.measure, static_cast<std::size_t>(c.k) * c.k,
                           static_cast<std::size_t>(c.validation_size), vrng);
  return ValidationSet::build(std::move(points), evaluator, c.cache_mb << 20, c.output_dir);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  assert_stream_separation(config);
  fs::create_directories(config.output_dir);

  const auto op = build_operator(config);
  const SolverOptions solver_options{config.cg_threshold};
  Evaluator setup(op, config.threads, solver_options);
  const ValidationSet validation = build_validation(config, setup);

  struct Job {
    std::size_t beta_index;
    int realization;
    std::optional<GreedyTrace> trace;
    std::vector<fs::path> files;
    std::string error;
  };
  std::vector<Job> jobs;
  for (std::size_t b = 0; b < config.beta_list.size(); ++b)
    for (int r = 0; r < config.realizations; ++r) jobs.push_back({b, r, std::nullopt, {}, {}});

  GreedyOptions options;
  options.selector = config.selector;
  options.pool_mode = config.pool_mode;

  auto run_job = [&](Job& job, Evaluator& evaluator) {
    const double beta = config.beta_list[job.beta_index];
    const std::string tag = "b" + beta_tag(beta) + "_r" + std::to_string(job.realization);
    try {
      RandomStream rng(training_seed(config.master_seed, beta, job.realization));
      GreedyResult res = run_scheduled(config.n_max, beta, config.measure, evaluator, rng, &validation, options);
      json j = trace_to_json(res.trace);
      j["config"] = config.to_json();
      j["beta"] = beta;
      j["realization"] = job.realization;
      const fs::path trace_path = config.output_dir / ("trace_" + tag + ".json");
      write_file_atomic(trace_path, j.dump(1) + "\n");
      job.files.push_back(trace_path);
      if (config.save_bases) {
        const fs::path basis_path = config.output_dir / ("basis_" + tag + ".rb");
        save_basis(res.basis, basis_path);
        job.files.push_back(basis_path);
      }
      job.trace = std::move(res.trace);
    } catch (const std::exception& e) {
      job.error = e.what();
    }
  };

  const int workers = std::min<int>(config.threads, static_cast<int>(std::max<std::size_t>(1, jobs.size())));
  if (workers <= 1) {
    Evaluator evaluator(op, 1, solver_options);
    for (auto& job : jobs) run_job(job, evaluator);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        Evaluator evaluator(op, 1, solver_options);
        for (std::size_t i; (i = next++) < jobs.size();) run_job(jobs[i], evaluator);
      });
    }
  }

  ExperimentResult result;
  result.curves.betas = config.beta_list;
  result.curves.realizations = config.realizations;
  result.curves.n_max = config.n_max;
  json manifest{{"config", config.to_json()}, {"jobs", json::array()}};
  std::string first_error;
  for (const auto& job : jobs) {
    const double beta = config.beta_list[job.beta_index];
    json entry{{"beta", beta}, {"realization", job.realization}};
    std::vector<std::string> names;
    for (const auto& f : job.files) names.push_back(f.filename().string());
    entry["files"] = names;
    if (!job.error.empty()) {
      entry["error"] = job.error;
      if (first_error.empty()) first_error = job.error;
    }
    manifest["jobs"].push_back(entry);
    result.files.insert(result.files.end(), job.files.begin(), job.files.end());
    if (!job.trace) continue;
    for (const auto& s : job.trace->steps) {
      result.curves.rows.push_back(
          {beta, job.realization, s.step, s.n_train, s.sigma_hat, s.sigma_val.value_or(std::nan(""))});
    }
  }
  manifest["status"] = first_error.empty() ? "complete" : "partial";
  if (!first_error.empty()) {
    write_file_atomic(config.output_dir / "manifest.json", manifest.dump(1) + "\n");
    throw std::runtime_error("experiment incomplete (see manifest.json): " + first_error);
  }

  std::ostringstream csv, summary;
  write_curves_csv(result.curves, csv);
  write_curves_summary_csv(result.curves, summary);
  write_file_atomic(config.output_dir / "curves.csv", csv.str());
  write_file_atomic(config.output_dir / "curves_summary.csv", summary.str());
  result.files.push_back(config.output_dir / "curves.csv");
  result.files.push_back(config.output_dir / "curves_summary.csv");
  if (auto svg = emit_plots(result.curves, config.output_dir / "plots")) result.files.push_back(*svg);
  manifest["validation_spilled"] = validation.spilled();
  write_file_atomic(config.output_dir / "manifest.json", manifest.dump(1) + "\n");
  return result;
}

// ---------------------------------------------------------------- certified

CertifiedRunSummary run_certified_cli(const ExperimentConfig& config) {
  config.validate();
  assert_stream_separation(config);
  fs::create_directories(config.output_dir);
  const fs::path trace_path = config.output_dir / "trace_certified.json";

  auto report_infeasible = [&](const ResourceError& e) {
    json j{{"status", "infeasible"}, {"error", e.what()}, {"config", config.to_json()}};
    j["m"] = e.m();
    j["N"] = e.training_size();
    write_file_atomic(trace_path, j.dump(1) + "\n");
  };

  CertifiedRunSummary summary;
  try {
    summary.budget = make_budget(config.epsilon, config.eta, config.r, config.m0, config.measure);
    if (summary.budget.n_train > config.max_training_size) {
      throw ResourceError("certified budget needs N=" + std::to_string(summary.budget.n_train) +
                              " evaluations per step (m=" + std::to_string(summary.budget.m) +
                              "), above max-training-size=" + std::to_string(config.max_training_size),
                          summary.budget.m, summary.budget.n_train);
    }
  } catch (const ResourceError& e) {
    report_infeasible(e);
    throw;
  }

  const auto op = build_operator(config);
  Evaluator evaluator(op, config.threads, SolverOptions{config.cg_threshold});
  const ValidationSet validation = build_validation(config, evaluator);
  GreedyOptions options;
  options.selector = config.selector;
  options.max_training_size = config.max_training_size;
  RandomStream rng(certified_seed(config.master_seed, 0));
  GreedyResult res = run_certified(summary.budget, evaluator, rng, &validation, options);
  summary.validation_error = estimate_true_error(res.basis, validation);
  summary.trace = res.trace;

  json j = trace_to_json(res.trace);
  j["status"] = "complete";
  j["config"] = config.to_json();
  j["m"] = summary.budget.m;
  j["N"] = summary.budget.n_train;
  j["basis_size"] = res.basis.size();
  j["validation_error"] = *summary.validation_error;
  write_file_atomic(trace_path, j.dump(1) + "\n");
  summary.files.push_back(trace_path);
  const fs::path basis_path = config.output_dir / "basis_certified.rb";
  save_basis(res.basis, basis_path);
  summary.files.push_back(basis_path);
  return summary;
}

// ---------------------------------------------------------------- lemma campaigns

int LemmaReport::violations() const {
  int v = 0;
  for (const auto& r : trials) v += r.pass ? 0 : 1;
  for (const auto& r : nikolskii) v += r.pass ? 0 : 1;
  for (const auto& r : superlevel) v += r.pass ? 0 : 1;
  return v;
}

json LemmaReport::to_json() const {
  json t = json::array(), n = json::array(), s = json::array();
  for (const auto& r : trials) {
    t.push_back({{"d", r.d}, {"m", r.m}, {"eta", r.eta}, {"N", r.n_train}, {"sup_est", r.sup_est},
                 {"trials", r.trials}, {"failures", r.failures}, {"bound", r.bound}, {"stderr", r.stderr_},
                 {"pass", r.pass}});
  }
  auto ineq = [](const LemmaInequalityRecord& r) {
    return json{{"d", r.d}, {"m", r.m}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"stderr", r.stderr_}, {"pass", r.pass}};
  };
  for (const auto& r : nikolskii) n.push_back(ineq(r));
  for (const auto& r : superlevel) s.push_back(ineq(r));
  return json{{"violations", violations()}, {"lemma_trials", t}, {"nikolskii", n}, {"superlevel", s}};
}

LemmaTrialRecord lemma_trial(const LowerSetPolynomial& p, double eta, int trials, RandomStream& rng) {
  LemmaTrialRecord rec;
  rec.d = p.dim();
  rec.m = p.cardinality();
  rec.eta = eta;
  rec.trials = trials;
  const SamplingMeasure measure = p.measure();
  const double alpha = measure_alpha(measure);
  const double m_alpha = std::pow(static_cast<double>(rec.m), alpha);
  rec.n_train = compute_n(static_cast<long long>(rec.m), eta, measure);
  RandomStream sup_rng = rng.split("lemma/sup");
  rec.sup_est = sup_norm_estimate(p, 100000, sup_rng);
  const double threshold = rec.sup_est / (8.0 * m_alpha);
  std::vector<double> y(p.dim());
  for (int t = 0; t < trials; ++t) {
    RandomStream tr = rng.split("lemma/trial", static_cast<std::uint64_t>(t));
    bool hit = false;
    for (long long i = 0; i < rec.n_train && !hit; ++i) {
      for (auto& v : y) v = sample_scalar(measure, tr);
      hit = std::abs(p(y)) >= threshold;
    }
    if (!hit) ++rec.failures;
  }
  rec.bound = std::pow(1.0 - 3.0 / (4.0 * m_alpha * m_alpha), static_cast<double>(rec.n_train));
  rec.stderr_ = std::sqrt(rec.bound * (1.0 - rec.bound) / trials);
  rec.pass = static_cast<double>(rec.failures) / trials <= rec.bound + 3.0 * rec.stderr_;
  return rec;
}

namespace {

LowerSetPolynomial random_polynomial(std::size_t m, std::size_t d, PolynomialBasis basis, RandomStream& rng) {
  MultiIndexSet lambda = random_downward_closed(m, d, rng);
  std::vector<double> c(lambda.size());
  for (auto& v : c) v = rng.normal();
  return LowerSetPolynomial(std::move(lambda), std::move(c), basis);
}

}  // namespace

LemmaReport run_lemma_mc(const ExperimentConfig& config, bool write_files) {
  config.validate();
  const PolynomialBasis basis = basis_for(config.measure);
  const double alpha = measure_alpha(config.measure);
  LemmaReport report;
  const auto mc = static_cast<std::size_t>(config.lemma_mc_samples);

  for (std::size_t e = 0; e < config.lemma_eta_list.size(); ++e) {
    const double eta = config.lemma_eta_list[e];
    RandomStream rng(derive_seed(config.master_seed, "lemma/trials", {e}));
    // Fixed anchors: a constant (m = 1) and the univariate degree-one basis polynomial (m = 2).
    {
      LowerSetPolynomial constant(MultiIndexSet(1, {{0}}), {1.0}, basis);
      RandomStream r0 = rng.split("anchor", 0);
      report.trials.push_back(lemma_trial(constant, eta, config.lemma_trials, r0));
      LowerSetPolynomial linear(MultiIndexSet(1, {{0}, {1}}), {0.0, 1.0}, basis);
      RandomStream r1 = rng.split("anchor", 1);
      report.trials.push_back(lemma_trial(linear, eta, config.lemma_trials, r1));
    }
    for (int i = 0; i < config.lemma_instances; ++i) {
      RandomStream inst = rng.split("instance", static_cast<std::uint64_t>(i));
      const std::size_t m = 1 + inst.below(static_cast<std::uint64_t>(config.lemma_trial_m_max));
      const std::size_t d = 1 + inst.below(static_cast<std::uint64_t>(config.lemma_d_max));
      const auto p = random_polynomial(m, d, basis, inst);
      report.trials.push_back(lemma_trial(p, eta, config.lemma_trials, inst));
    }
  }

  RandomStream nrng(derive_seed(config.master_seed, "lemma/nikolskii"));
  RandomStream srng(derive_seed(config.master_seed, "lemma/superlevel"));
  for (int i = 0; i < config.lemma_instances; ++i) {
    {
      RandomStream inst = nrng.split("instance", static_cast<std::uint64_t>(i));
      const std::size_t m = 1 + inst.below(static_cast<std::uint64_t>(config.lemma_m_max));
      const std::size_t d = 1 + inst.below(static_cast<std::uint64_t>(config.lemma_d_max));
      const auto p = random_polynomial(m, d, basis, inst);
      const auto est = nikolskii_check(p, 0, mc, inst);
      const double m_alpha = std::pow(static_cast<double>(m), alpha);
      LemmaInequalityRecord rec{d, m, est.sup_est, m_alpha * est.l2_est, m_alpha * est.l2_stderr, false};
      rec.pass = rec.lhs <= rec.rhs + 3.0 * rec.stderr_;
      report.nikolskii.push_back(rec);
    }
    {
      RandomStream inst = srng.split("instance", static_cast<std::uint64_t>(i));
      const std::size_t m = 1 + inst.below(static_cast<std::uint64_t>(config.lemma_m_max));
      const std::size_t d = 1 + inst.below(static_cast<std::uint64_t>(config.lemma_d_max));
      const auto p = random_polynomial(m, d, basis, inst);
      const auto est = superlevel_measure(p, 0.0, mc, inst);
      const double bound = 3.0 / (4.0 * std::pow(static_cast<double>(m), 2.0 * alpha));
      LemmaInequalityRecord rec{d, m, est.measure, bound, est.stderr_, false};
      rec.pass = rec.lhs + 3.0 * rec.stderr_ >= rec.rhs;
      report.superlevel.push_back(rec);
    }
  }

  if (write_files) {
    fs::create_directories(config.output_dir);
    json j = report.to_json();
    j["config"] = config.to_json();
    write_file_atomic(config.output_dir / "lemma_report.json", j.dump(1) + "\n");
  }
  return report;
}

// ---------------------------------------------------------------- plots

std::string render_svg(const ErrorCurves& curves, const std::string& title) {
  constexpr double width = 640, height = 420, left = 70, right = 150, top = 40, bottom = 50;
  const auto stats = curves.stats();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& s : stats) {
    if (s.mean > 0.0) lo = std::min(lo, s.mean);
    hi = std::max(hi, s.mean);
  }
  if (!(hi > 0.0)) {
    lo = 1e-1;
    hi = 1.0;
  }
  const double ylo = std::floor(std::log10(lo)), yhi = std::max(ylo + 1.0, std::ceil(std::log10(hi)));
  const int nmax = std::max(2, curves.n_max);
  auto px = [&](double n) { return left + (n - 1.0) / (nmax - 1.0) * (width - left - right); };
  auto py = [&](double v) {
    const double lv = std::log10(std::max(v, std::pow(10.0, ylo)));
    return top + (yhi - lv) / (yhi - ylo) * (height - top - bottom);
  };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  char buf[256];
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  svg << "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (width - right + left) / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << title << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" stroke=\"black\"/>\n",
                left, top, width - left - right, height - top - bottom);
  svg << buf;
  for (int e = static_cast<int>(ylo); e <= static_cast<int>(yhi); ++e) {
    const double y = py(std::pow(10.0, e));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" font-size=\"11\">1e%d</text>\n",
                  left, y, width - right, y, left - 6, y + 4, e);
    svg << buf;
  }
  const int xstep = std::max(1, nmax / 10);
  for (int n = 1; n <= nmax; n += xstep) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\" font-size=\"11\">%d</text>\n",
                  px(n), height - bottom + 16, n);
    svg << buf;
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">n</text>\n";
  for (std::size_t b = 0; b < curves.betas.size(); ++b) {
    const char* color = colors[b % 10];
    svg << "<polyline class=\"curve\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& s : stats) {
      if (s.beta != curves.betas[b]) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.n), py(s.mean));
      svg << buf;
    }
    svg << "\"/>\n";
    const double ly = top + 16.0 + 18.0 * static_cast<double>(b);
    std::snprintf(buf, sizeof buf,
                  "<g class=\"legend\"><line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                  "stroke-width=\"2\"/><text x=\"%.2f\" y=\"%.2f\" font-size=\"12\">beta = %g</text></g>\n",
                  width - right + 12, ly, width - right + 36, ly, color, width - right + 42, ly + 4,
                  curves.betas[b]);
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::optional<fs::path> emit_plots(const ErrorCurves& curves, const fs::path& dir, const std::string& name) {
  if (curves.betas.empty()) {
    std::cerr << "warning: no beta values in the curves, no plot written\n";
    return std::nullopt;
  }
  fs::create_directories(dir);
  const fs::path path = dir / (name + ".svg");
  write_file_atomic(path, render_svg(curves, "mean validation error, " + std::to_string(curves.realizations) +
                                                 " realization(s)"));
  return path;
}

}  // namespace rbg
