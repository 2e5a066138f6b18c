// rbgreedy: command line front end for the reduced basis experiments.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rbgreedy/basis_io.hpp"
#include "rbgreedy/errors.hpp"
#include "rbgreedy/experiments.hpp"

using namespace rbg;
namespace fs = std::filesystem;

namespace {

std::vector<ParameterVector> read_parameter_rows(const fs::path& path, std::size_t d) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<ParameterVector> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> values;
    std::istringstream ss(line);
    std::string field;
    bool numeric = true;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": not a numeric row");
    }
    if (values.size() != d) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) +
                            " values, got " + std::to_string(values.size()));
    }
    rows.emplace_back(std::move(values));
  }
  return rows;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int run_online(const fs::path& basis_path, const fs::path& params_path, bool truth, const fs::path& out_dir) {
  const ReducedBasis rb = load_basis(basis_path);
  const auto rows = read_parameter_rows(params_path, rb.param_dim());
  Solver solver(rb.op());
  std::ostringstream csv;
  csv << "row";
  for (std::size_t i = 0; i < rb.size(); ++i) csv << ",c" << i;
  csv << ",residual";
  if (truth) csv << ",error";
  csv << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto sol = online_solve(rb, rows[r], true);
    csv << r;
    for (Eigen::Index i = 0; i < sol.coeffs.size(); ++i) csv << ',' << fmt(sol.coeffs[i]);
    csv << ',' << fmt(riesz_residual_norm(*rb.op(), rows[r], *sol.lifted));
    if (truth) {
      const Vector e = solver.solve(rows[r]).coeffs - *sol.lifted;
      csv << ',' << fmt(std::sqrt(e.dot(rb.op()->inner * e)));
    }
    csv << '\n';
  }
  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "online.csv", csv.str());
  std::cout << "online: " << rows.size() << " parameter rows, n=" << rb.size() << " -> "
            << (out_dir / "online.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak greedy reduced basis construction over random training sets"};
  app.set_config("--config", "", "Flat key = value configuration file; flags override it");
  app.require_subcommand(1);

  ExperimentConfig c;
  std::string measure = "uniform", pool_mode = "fresh", selector = "exact";
  std::vector<double> betas;
  app.add_option("--k", c.k, "Coefficient grid is k x k (d = k^2)")->capture_default_str();
  app.add_option("--t", c.t, "Amplitude decay a_j = j^-t")->capture_default_str();
  app.add_option("--delta", c.delta, "Ellipticity margin, abar = 1 + delta")->capture_default_str();
  app.add_option("--grid-n", c.grid_n, "Finite element cells per side")->capture_default_str();
  app.add_option("--beta", betas, "Schedule exponent, N(n) = floor(n^beta); repeatable");
  app.add_option("--n-max", c.n_max, "Scheduled steps")->capture_default_str();
  app.add_option("--realizations", c.realizations, "Realizations per beta")->capture_default_str();
  app.add_option("--validation-size", c.validation_size, "Held-out validation points")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "Certified target accuracy")->capture_default_str();
  app.add_option("--eta", c.eta, "Certified failure probability")->capture_default_str();
  app.add_option("--r", c.r, "Approximation rate r")->capture_default_str();
  app.add_option("--m0", c.m0, "Approximation class bound M0")->capture_default_str();
  app.add_option("--measure", measure, "Sampling measure")
      ->check(CLI::IsMember({"uniform", "chebyshev"}))
      ->capture_default_str();
  app.add_option("--seed", c.master_seed, "Master seed")->capture_default_str();
  app.add_option("--out", c.output_dir, "Output directory")->capture_default_str();
  app.add_option("--pool-mode", pool_mode, "Training draws per step")
      ->check(CLI::IsMember({"fresh", "cumulative"}))
      ->capture_default_str();
  app.add_option("--selector", selector, "Selection criterion")
      ->check(CLI::IsMember({"exact", "residual"}))
      ->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();
  app.add_option("--cache-mb", c.cache_mb, "Validation snapshot memory cap before spilling to disk")
      ->capture_default_str();
  app.add_option("--max-training-size", c.max_training_size, "Refuse certified runs with larger N")
      ->capture_default_str();
  app.add_option("--lemma-instances", c.lemma_instances)->capture_default_str();
  app.add_option("--lemma-trials", c.lemma_trials)->capture_default_str();
  app.add_option("--lemma-m-max", c.lemma_m_max)->capture_default_str();
  app.add_option("--lemma-d-max", c.lemma_d_max)->capture_default_str();
  app.add_option("--lemma-mc-samples", c.lemma_mc_samples)->capture_default_str();
  app.add_flag("!--no-bases", c.save_bases, "Do not write basis files");

  auto* schedule = app.add_subcommand("schedule", "Scheduled sweep over beta and realizations");
  auto* certify = app.add_subcommand("certify", "Certified greedy with computed (m, N)");
  auto* lemma = app.add_subcommand("lemma-mc", "Monte Carlo campaigns for the polynomial inequalities");
  auto* plot = app.add_subcommand("plot", "SVG error curves from curves.csv");
  fs::path curves_path;
  plot->add_option("--curves", curves_path, "Input CSV (default: <out>/curves.csv)");
  auto* online = app.add_subcommand("online", "Online reduced solves from a saved basis");
  fs::path basis_path, params_path;
  bool truth = false;
  online->add_option("--basis", basis_path, "Basis file")->required()->check(CLI::ExistingFile);
  online->add_option("--params", params_path, "CSV of parameter rows")->required()->check(CLI::ExistingFile);
  online->add_flag("--truth", truth, "Also report the true V-norm error from a high-fidelity solve");
  for (auto* sub : {schedule, certify, lemma, plot, online}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    c.measure = parse_measure(measure);
    c.pool_mode = parse_pool_mode(pool_mode);
    c.selector = parse_selector(selector);
    if (!betas.empty()) c.beta_list = betas;

    if (*schedule) {
      c.mode = Mode::Scheduled;
      const auto res = run_experiment(c);
      std::cout << "schedule: " << res.curves.rows.size() << " curve rows, " << res.files.size()
                << " files in " << c.output_dir.string() << "\n";
      for (const auto& s : res.curves.stats())
        if (s.n == c.n_max) std::cout << "  beta=" << s.beta << " mean sigma_val(n_max)=" << s.mean << "\n";
    } else if (*certify) {
      c.mode = Mode::Certified;
      const auto s = run_certified_cli(c);
      std::cout << "certify: m=" << s.budget.m << " N=" << s.budget.n_train << " steps=" << s.trace.steps.size()
                << " termination=" << to_string(s.trace.termination) << " evaluations=" << s.trace.evaluations;
      if (s.validation_error) std::cout << " validation_error=" << *s.validation_error;
      std::cout << "\n";
    } else if (*lemma) {
      c.mode = Mode::LemmaMC;
      const auto rep = run_lemma_mc(c);
      std::cout << "lemma-mc: " << rep.trials.size() << " lemma instances, " << rep.nikolskii.size()
                << " Nikolskii, " << rep.superlevel.size() << " superlevel; violations=" << rep.violations()
                << "\n";
      return rep.violations() == 0 ? 0 : 4;
    } else if (*plot) {
      const auto curves = read_curves_csv(curves_path.empty() ? c.output_dir / "curves.csv" : curves_path);
      if (const auto p = emit_plots(curves, c.output_dir / "plots")) std::cout << "plot: " << p->string() << "\n";
    } else if (*online) {
      return run_online(basis_path, params_path, truth, c.output_dir);
    }
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << " (m=" << e.m() << ", N=" << e.training_size() << ")\n";
    return 3;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
