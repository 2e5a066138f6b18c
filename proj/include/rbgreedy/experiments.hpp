#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rbgreedy/greedy.hpp"
#include "rbgreedy/params.hpp"
#include "rbgreedy/polytools.hpp"

namespace rbg {

enum class Mode { Scheduled, Certified, LemmaMC };

struct ExperimentConfig {
  Mode mode = Mode::Scheduled;
  // model and discretization
  int k = 4;
  double t = 2.0;
  double delta = 1e-2;
  int grid_n = 16;
  SamplingMeasure measure = SamplingMeasure::Uniform;
  // scheduled sweep
  std::vector<double> beta_list = {1.0, 1.25, 1.5, 1.75, 2.0};
  int n_max = 30;
  int realizations = 20;
  int validation_size = 2000;
  PoolMode pool_mode = PoolMode::Fresh;
  Selector selector = Selector::Exact;
  // certified mode
  double epsilon = 1e-2;
  double eta = 0.05;
  double r = 3.0;
  double m0 = 1.0;
  long long max_training_size = 100'000'000;
  // Lemma Monte Carlo campaigns
  int lemma_instances = 50;
  int lemma_trials = 2000;
  int lemma_trial_m_max = 8;
  int lemma_m_max = 15;
  int lemma_d_max = 6;
  int lemma_mc_samples = 100'000;
  std::vector<double> lemma_eta_list = {0.25, 0.05};
  // execution
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  int threads = 1;
  std::size_t cache_mb = 2048;
  std::size_t cg_threshold = 250000;
  bool save_bases = true;

  /// Throws InvalidArgument on any out-of-range field.
  void validate() const;
  nlohmann::json to_json() const;
};

std::string_view to_string(Mode m);

// ---------------------------------------------------------------- seeds

/// Stream tags are namespaced: training streams live under "train/",
/// held-out validation under "validation/", fixed pools under "pool/".
std::uint64_t training_seed(std::uint64_t master, double beta, int realization);
std::uint64_t validation_seed(std::uint64_t master, int k, double t);
std::uint64_t certified_seed(std::uint64_t master, int run);
/// Throws std::logic_error if the validation seed equals any training seed of the sweep.
void assert_stream_separation(const ExperimentConfig& config);

// ---------------------------------------------------------------- curves

struct CurveRow {
  double beta = 0.0;
  int realization = 0;
  int n = 0;
  long long n_train = 0;
  double sigma_hat = 0.0;
  double sigma_val = 0.0;
};

struct CurveStats {
  double beta = 0.0;
  int n = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Validation error curves of a scheduled sweep: raw rows in (beta,
/// realization, n) order plus per-(beta, n) statistics over realizations.
struct ErrorCurves {
  std::vector<double> betas;
  int realizations = 0;
  int n_max = 0;
  std::vector<CurveRow> rows;

  std::vector<CurveStats> stats() const;
  /// Mean of sigma_val over realizations at (beta, n); throws if absent.
  double mean_at(double beta, int n) const;
};

inline constexpr const char* kCurvesHeader = "beta,realization,n,N_n,sigma_hat,sigma_val";

void write_curves_csv(const ErrorCurves& curves, std::ostream& out);
void write_curves_summary_csv(const ErrorCurves& curves, std::ostream& out);
ErrorCurves read_curves_csv(std::istream& in);
ErrorCurves read_curves_csv(const std::filesystem::path& path);

nlohmann::json trace_to_json(const GreedyTrace& trace, bool include_timing = true);

/// Writes text through a temporary file and an atomic rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// ---------------------------------------------------------------- drivers

struct ExperimentResult {
  ErrorCurves curves;
  std::vector<std::filesystem::path> files;
};

/// Scheduled sweep over beta_list x realizations. Writes curves.csv,
/// curves_summary.csv, trace_<tag>.json, basis_<tag>.rb and manifest.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct CertifiedRunSummary {
  CertifiedBudget budget;
  GreedyTrace trace;
  std::optional<double> validation_error;
  std::vector<std::filesystem::path> files;
};

/// Computes (m, N), runs the certified greedy and writes trace_certified.json
/// and basis_certified.rb. An infeasible budget is written to the trace file
/// and then rethrown as ResourceError.
CertifiedRunSummary run_certified_cli(const ExperimentConfig& config);

struct LemmaTrialRecord {
  std::size_t d = 0;
  std::size_t m = 0;
  double eta = 0.0;
  long long n_train = 0;
  double sup_est = 0.0;
  int trials = 0;
  int failures = 0;
  double bound = 0.0;
  double stderr_ = 0.0;
  bool pass = false;
};

struct LemmaInequalityRecord {
  std::size_t d = 0;
  std::size_t m = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double stderr_ = 0.0;
  bool pass = false;
};

struct LemmaReport {
  std::vector<LemmaTrialRecord> trials;
  std::vector<LemmaInequalityRecord> nikolskii;
  std::vector<LemmaInequalityRecord> superlevel;

  int violations() const;
  nlohmann::json to_json() const;
};

/// Empirical failure frequency of "max over N draws of |P| < M/(8 m^alpha)"
/// for one polynomial, over independent trials.
LemmaTrialRecord lemma_trial(const LowerSetPolynomial& p, double eta, int trials, RandomStream& rng);

LemmaReport run_lemma_mc(const ExperimentConfig& config, bool write_files = true);

// ---------------------------------------------------------------- plots

/// One SVG per curves object: log-scale mean validation error against n, one
/// line per beta. Returns the written file, or nothing (with a warning on
/// stderr) when there is no beta to draw.
std::optional<std::filesystem::path> emit_plots(const ErrorCurves& curves, const std::filesystem::path& dir,
                                                const std::string& name = "curves");
/// The SVG text itself, for callers that want to compare or embed it.
std::string render_svg(const ErrorCurves& curves, const std::string& title);

}  // namespace rbg
