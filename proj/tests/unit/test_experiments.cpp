#include <doctest.h>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "../oracles.hpp"
#include "rbgreedy/basis_io.hpp"
#include "rbgreedy/errors.hpp"
#include "rbgreedy/experiments.hpp"

using namespace rbg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rbgreedy_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.k = 2;
  c.grid_n = 8;
  c.beta_list = {1.0, 2.0};
  c.n_max = 4;
  c.realizations = 2;
  c.validation_size = 50;
  c.output_dir = out;
  return c;
}

std::shared_ptr<const AffineOperator> make_op(int grid_n, int k) {
  return std::make_shared<const AffineOperator>(
      assemble(build_mesh(grid_n, k), build_checkerboard_model(k, 2.0, 0.01)));
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [&](auto mutate) {
    ExperimentConfig x;
    mutate(x);
    CHECK_THROWS_AS(x.validate(), InvalidArgument);
  };
  bad([](ExperimentConfig& x) { x.k = 0; });
  bad([](ExperimentConfig& x) { x.t = 0.0; });
  bad([](ExperimentConfig& x) { x.delta = -1.0; });
  bad([](ExperimentConfig& x) { x.grid_n = 10; });
  bad([](ExperimentConfig& x) { x.beta_list = {1.0, 0.5}; });
  bad([](ExperimentConfig& x) { x.realizations = 0; });
  bad([](ExperimentConfig& x) { x.n_max = 0; });
  bad([](ExperimentConfig& x) { x.eta = 1.0; });
  bad([](ExperimentConfig& x) { x.epsilon = 0.0; });
  bad([](ExperimentConfig& x) { x.threads = 0; });
}

TEST_CASE("seed derivation") {
  CHECK(training_seed(1, 1.5, 3) == training_seed(1, 1.5, 3));
  CHECK(training_seed(1, 1.5, 3) != training_seed(1, 1.5, 4));
  CHECK(training_seed(1, 1.5, 3) != training_seed(1, 1.25, 3));
  CHECK(training_seed(1, 1.5, 3) != training_seed(2, 1.5, 3));
  CHECK(validation_seed(1, 4, 2.0) != validation_seed(1, 4, 1.0));
  CHECK(validation_seed(1, 4, 2.0) != validation_seed(1, 8, 2.0));
  ExperimentConfig c;
  CHECK_NOTHROW(assert_stream_separation(c));
}

TEST_CASE("scheduled experiment outputs") {
  const auto out = scratch("schedule");
  auto c = tiny_config(out);
  c.beta_list = {1.0};
  c.realizations = 1;
  c.n_max = 2;
  const auto res = run_experiment(c);
  CHECK(res.curves.rows.size() == 2);
  const std::string csv = slurp(out / "curves.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "beta,realization,n,N_n,sigma_hat,sigma_val");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 2);
  CHECK(csv.back() == '\n');
  const std::string summary = slurp(out / "curves_summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 3);
  CHECK(fs::exists(out / "trace_b1_r0.json"));
  CHECK(fs::exists(out / "basis_b1_r0.rb"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "plots" / "curves.svg"));
  const auto trace = nlohmann::json::parse(slurp(out / "trace_b1_r0.json"));
  CHECK(trace["steps"].size() == 2);
  CHECK(trace["config"]["k"] == 2);
  CHECK(trace["steps"][0].contains("wall_time"));
}

TEST_CASE("CSV values carry 17 significant digits") {
  ErrorCurves curves;
  curves.betas = {1.25};
  curves.realizations = 1;
  curves.n_max = 1;
  curves.rows.push_back({1.25, 0, 1, 1, 0.1, 2.0 / 3.0});
  std::ostringstream out;
  write_curves_csv(curves, out);
  CHECK(out.str() == "beta,realization,n,N_n,sigma_hat,sigma_val\n"
                     "1.25,0,1,1,0.10000000000000001,0.66666666666666663\n");
  std::istringstream in(out.str());
  const auto back = read_curves_csv(in);
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0].sigma_val == 2.0 / 3.0);
  CHECK(back.rows[0].sigma_hat == 0.1);
  std::istringstream wrong("beta,n\n");
  CHECK_THROWS_AS(read_curves_csv(wrong), InvalidArgument);
}

TEST_CASE("identical seeds give byte-identical outputs") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto ca = tiny_config(a), cb = tiny_config(b);
  cb.threads = 2;
  run_experiment(ca);
  run_experiment(cb);
  CHECK(slurp(a / "curves.csv") == slurp(b / "curves.csv"));
  CHECK(slurp(a / "curves_summary.csv") == slurp(b / "curves_summary.csv"));
  for (const char* tag : {"b1_r0", "b2_r1"}) {
    auto ja = nlohmann::json::parse(slurp(a / (std::string("trace_") + tag + ".json")));
    auto jb = nlohmann::json::parse(slurp(b / (std::string("trace_") + tag + ".json")));
    for (auto* j : {&ja, &jb}) {
      for (auto& s : (*j)["steps"]) s.erase("wall_time");
      j->erase("total_wall_time");
      (*j)["config"].erase("threads");
    }
    CHECK(ja == jb);
    CHECK(slurp(a / (std::string("basis_") + tag + ".rb")) == slurp(b / (std::string("basis_") + tag + ".rb")));
  }
  auto cc = tiny_config(a);
  cc.master_seed = 2;
  const auto other = run_experiment(cc);
  CHECK(slurp(a / "curves.csv") != slurp(b / "curves.csv"));
}

TEST_CASE("curve statistics") {
  const auto out = scratch("stats");
  const auto res = run_experiment(tiny_config(out));
  const auto& curves = res.curves;
  CHECK(curves.rows.size() == 2u * 2u * 4u);
  const auto stats = curves.stats();
  CHECK(stats.size() == 2u * 4u);
  for (const auto& s : stats) {
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
  }
  const auto back = read_curves_csv(out / "curves.csv");
  CHECK(back.betas == curves.betas);
  CHECK(back.realizations == 2);
  CHECK(back.n_max == 4);
  CHECK(back.mean_at(2.0, 3) == curves.mean_at(2.0, 3));
  CHECK_THROWS_AS(curves.mean_at(1.5, 1), InvalidArgument);
}

TEST_CASE("plots") {
  ErrorCurves empty;
  const auto dir = scratch("plots");
  CHECK_FALSE(emit_plots(empty, dir).has_value());
  CHECK(fs::is_empty(dir));

  ErrorCurves curves;
  curves.betas = {1.0, 1.25, 1.5, 1.75, 2.0};
  curves.realizations = 1;
  curves.n_max = 3;
  for (double b : curves.betas)
    for (int n = 1; n <= 3; ++n) curves.rows.push_back({b, 0, n, n, 1.0 / (n * b), 0.5 / (n * b)});
  const auto path = emit_plots(curves, dir);
  REQUIRE(path);
  const std::string svg = slurp(*path);
  const std::regex legend("class=\"legend\"");
  CHECK(std::distance(std::sregex_iterator(svg.begin(), svg.end(), legend), std::sregex_iterator()) == 5);

  std::ostringstream csv;
  write_curves_csv(curves, csv);
  std::istringstream in(csv.str());
  CHECK(render_svg(read_curves_csv(in), "t") == render_svg(curves, "t"));
}

TEST_CASE("basis save and load") {
  const auto dir = scratch("basis");
  auto op = make_op(8, 2);
  Evaluator ev(op);
  RandomStream rng(3);
  const auto res = run_scheduled(6, 1.5, SamplingMeasure::Uniform, ev, rng);
  const fs::path path = dir / "b.rb";
  save_basis(res.basis, path);
  const auto loaded = load_basis(path);

  REQUIRE(loaded.size() == res.basis.size());
  CHECK(loaded.provenance() == res.basis.provenance());
  for (std::size_t i = 0; i < loaded.size(); ++i) CHECK(loaded.vectors()[i] == res.basis.vectors()[i]);
  CHECK(loaded.reduced_a0() == res.basis.reduced_a0());
  for (std::size_t j = 0; j < loaded.param_dim(); ++j)
    CHECK(loaded.reduced_components()[j] == res.basis.reduced_components()[j]);
  CHECK(loaded.reduced_load() == res.basis.reduced_load());
  CHECK((loaded.gram() - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(loaded.op()->model.amplitudes == op->model.amplitudes);
  for (int i = 0; i < 10; ++i) {
    const auto y = sample(SamplingMeasure::Uniform, 4, rng);
    CHECK(online_solve(loaded, y).coeffs == online_solve(res.basis, y).coeffs);
  }

  const std::string bytes = slurp(path);
  auto write = [&](const std::string& s) {
    std::ofstream o(dir / "bad.rb", std::ios::binary);
    o << s;
  };
  auto kind_of = [&]() {
    try {
      load_basis(dir / "bad.rb");
    } catch (const BasisLoadError& e) {
      return e.kind();
    }
    FAIL("corrupt basis loaded without error");
    return BasisLoadError::Kind::Io;
  };
  std::string corrupt = bytes;
  corrupt[bytes.size() / 2] ^= 0x20;
  write(corrupt);
  CHECK(kind_of() == BasisLoadError::Kind::ChecksumMismatch);
  write(bytes.substr(0, bytes.size() - 100));
  CHECK(kind_of() == BasisLoadError::Kind::Truncated);
  std::string version = bytes;
  version[8] = 7;
  write(version);
  CHECK(kind_of() == BasisLoadError::Kind::VersionMismatch);
  std::string magic = bytes;
  magic[0] = 'X';
  write(magic);
  CHECK(kind_of() == BasisLoadError::Kind::BadMagic);
  CHECK_THROWS_AS(load_basis(dir / "missing.rb"), BasisLoadError);
}

TEST_CASE("certified driver") {
  const auto out = scratch("certified");
  auto c = tiny_config(out);
  c.mode = Mode::Certified;
  c.epsilon = 1e6;
  c.eta = 0.5;
  c.m0 = 1.0;
  const auto s = run_certified_cli(c);
  CHECK(s.trace.steps.size() == 1);
  CHECK(s.trace.termination == Termination::HitTolerance);
  const auto j = nlohmann::json::parse(slurp(out / "trace_certified.json"));
  CHECK(j["termination"] == "HitTolerance");
  CHECK(j["N"] == oracle::brute_n(j["m"].get<long long>(), 0.5, 1.0));
  CHECK(j["evaluations"] == j["N"].get<long long>() * static_cast<long long>(j["steps"].size()));

  c.epsilon = 1.0;
  c.m0 = 0.5;
  c.eta = 0.1;
  const auto s2 = run_certified_cli(c);
  CHECK(s2.trace.steps.size() > 1);
  CHECK(s2.trace.evaluations == static_cast<long long>(s2.trace.steps.size()) * s2.budget.n_train);
  CHECK(s2.budget.n_train == oracle::brute_n(s2.budget.m, 0.1, 1.0));
  CHECK(fs::exists(out / "basis_certified.rb"));

  c.epsilon = 1e-2;
  c.max_training_size = 1000;
  CHECK_THROWS_AS(run_certified_cli(c), ResourceError);
  const auto inf = nlohmann::json::parse(slurp(out / "trace_certified.json"));
  CHECK(inf["status"] == "infeasible");
  CHECK(inf["m"] == oracle::brute_m(1e-2, 3.0, 0.5, 1.0));
}

TEST_CASE("lemma trials") {
  RandomStream rng(4);
  const LowerSetPolynomial constant(MultiIndexSet(1, {{0}}), {1.0}, PolynomialBasis::Legendre);
  const auto r1 = lemma_trial(constant, 0.25, 1000, rng);
  CHECK(r1.failures == 0);
  CHECK(r1.pass);

  const LowerSetPolynomial linear(MultiIndexSet(1, {{0}, {1}}), {0.0, 1.0}, PolynomialBasis::Legendre);
  const auto r2 = lemma_trial(linear, 0.25, 10'000, rng);
  CHECK(r2.n_train == 14);
  CHECK(r2.bound == doctest::Approx(std::pow(13.0 / 16.0, 14)));
  CHECK(r2.bound <= 0.0625);
  CHECK(static_cast<double>(r2.failures) / r2.trials <= 0.0625 + 3 * r2.stderr_);

  ExperimentConfig c;
  c.lemma_instances = 5;
  c.lemma_trials = 200;
  c.lemma_mc_samples = 5000;
  c.output_dir = scratch("lemma");
  const auto report = run_lemma_mc(c);
  CHECK(report.trials.size() == 2u * (5u + 2u));
  CHECK(report.nikolskii.size() == 5);
  CHECK(report.superlevel.size() == 5);
  CHECK(report.violations() == 0);
  CHECK(fs::exists(c.output_dir / "lemma_report.json"));
}
