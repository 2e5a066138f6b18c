#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rbgreedy/basis_io.hpp"
#include "rbgreedy/errors.hpp"
#include "rbgreedy/experiments.hpp"

namespace py = pybind11;
using namespace rbg;

namespace {

using OpPtr = std::shared_ptr<AffineOperator>;

ParameterVector to_y(const std::vector<double>& y) { return ParameterVector(y); }

OpPtr make_operator(int k, double t, double delta, int grid_n, bool manufactured) {
  return std::make_shared<AffineOperator>(assemble(
      build_mesh(grid_n, k), build_checkerboard_model(k, t, delta),
      manufactured ? LoadSpec::manufactured() : LoadSpec::constant()));
}

py::dict trace_dict(const GreedyTrace& trace) {
  return py::module_::import("json").attr("loads")(trace_to_json(trace).dump());
}

py::dict budget_dict(const CertifiedBudget& b) {
  py::dict d;
  d["m"] = b.m;
  d["N"] = b.n_train;
  d["alpha"] = b.alpha;
  d["tolerance"] = b.tolerance();
  d["step_cap"] = b.step_cap();
  return d;
}

ExperimentConfig config_from(const py::dict& kw) {
  ExperimentConfig c;
  for (auto [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "k") c.k = value.cast<int>();
    else if (k == "t") c.t = value.cast<double>();
    else if (k == "delta") c.delta = value.cast<double>();
    else if (k == "grid_n") c.grid_n = value.cast<int>();
    else if (k == "measure") c.measure = parse_measure(value.cast<std::string>());
    else if (k == "beta") c.beta_list = value.cast<std::vector<double>>();
    else if (k == "n_max") c.n_max = value.cast<int>();
    else if (k == "realizations") c.realizations = value.cast<int>();
    else if (k == "validation_size") c.validation_size = value.cast<int>();
    else if (k == "pool_mode") c.pool_mode = parse_pool_mode(value.cast<std::string>());
    else if (k == "selector") c.selector = parse_selector(value.cast<std::string>());
    else if (k == "epsilon") c.epsilon = value.cast<double>();
    else if (k == "eta") c.eta = value.cast<double>();
    else if (k == "r") c.r = value.cast<double>();
    else if (k == "m0") c.m0 = value.cast<double>();
    else if (k == "seed") c.master_seed = value.cast<std::uint64_t>();
    else if (k == "out") c.output_dir = value.cast<std::string>();
    else if (k == "threads") c.threads = value.cast<int>();
    else if (k == "save_bases") c.save_bases = value.cast<bool>();
    else if (k == "max_training_size") c.max_training_size = value.cast<long long>();
    else throw InvalidArgument("unknown configuration key '" + k + "'");
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weak greedy reduced bases over random training sets";

  py::register_exception<NumericalFailure>(m, "NumericalFailure");
  py::register_exception<BreakdownError>(m, "BreakdownError");
  py::register_exception<ResourceError>(m, "ResourceError");
  py::register_exception<BasisLoadError>(m, "BasisLoadError");

  m.def("sample", [](const std::string& measure, std::size_t d, std::size_t count, std::uint64_t seed) {
    RandomStream rng(seed);
    Eigen::MatrixXd out(count, d);
    const auto m_ = parse_measure(measure);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = 0; j < d; ++j) out(i, j) = sample_scalar(m_, rng);
    return out;
  }, py::arg("measure"), py::arg("d"), py::arg("count"), py::arg("seed"));

  m.def("coefficient_value", [](int k, double t, double delta, const std::vector<double>& y, double x0, double x1) {
    return coefficient_value(build_checkerboard_model(k, t, delta), to_y(y), x0, x1);
  }, py::arg("k"), py::arg("t"), py::arg("delta"), py::arg("y"), py::arg("x0"), py::arg("x1"));

  // polytools
  m.def("hyperbolic_cross", [](int m_, std::size_t d) {
    std::vector<MultiIndex> out;
    for (const auto& nu : hyperbolic_cross(m_, d)) out.push_back(nu);
    return out;
  });
  m.def("is_downward_closed", [](const std::vector<MultiIndex>& s, std::size_t d) {
    MultiIndexSet set(d);
    for (const auto& nu : s) set.insert(nu);
    return is_downward_closed(set);
  });
  m.def("christoffel_sum", [](const std::vector<MultiIndex>& s, const std::vector<double>& y,
                              const std::string& basis) {
    MultiIndexSet set(y.size());
    for (const auto& nu : s) set.insert(nu);
    return christoffel_sum(set, y, basis == "chebyshev" ? PolynomialBasis::Chebyshev : PolynomialBasis::Legendre);
  }, py::arg("indices"), py::arg("y"), py::arg("basis") = "legendre");
  m.def("legendre_eval", [](const MultiIndex& nu, const std::vector<double>& y) { return legendre_eval(nu, y); });
  m.def("chebyshev_eval", [](const MultiIndex& nu, const std::vector<double>& y) { return chebyshev_eval(nu, y); });
  m.def("compute_m", [](double eps, double r, double m0, const std::string& measure) {
    return compute_m(eps, r, m0, parse_measure(measure));
  }, py::arg("epsilon"), py::arg("r"), py::arg("m0"), py::arg("measure") = "uniform");
  m.def("compute_n", [](long long m_, double eta, const std::string& measure) {
    return compute_n(m_, eta, parse_measure(measure));
  }, py::arg("m"), py::arg("eta"), py::arg("measure") = "uniform");
  m.def("make_budget", [](double eps, double eta, double r, double m0, const std::string& measure) {
    return budget_dict(make_budget(eps, eta, r, m0, parse_measure(measure)));
  }, py::arg("epsilon"), py::arg("eta"), py::arg("r"), py::arg("m0"), py::arg("measure") = "uniform");

  // high-fidelity model
  py::class_<AffineOperator, OpPtr>(m, "Operator")
      .def(py::init(&make_operator), py::arg("k"), py::arg("t"), py::arg("delta"), py::arg("grid_n"),
           py::arg("manufactured") = false)
      .def_property_readonly("num_dofs", &AffineOperator::num_dofs)
      .def_property_readonly("dim", &AffineOperator::dim)
      .def_property_readonly("load", [](const AffineOperator& op) { return op.load; })
      .def("solve", [](const OpPtr& op, const std::vector<double>& y) { return solve(op, to_y(y)).coeffs; })
      .def("vnorm", [](const AffineOperator& op, const Vector& v) { return op.vspace->norm(v); })
      .def("residual_norm", [](const AffineOperator& op, const std::vector<double>& y, const Vector& v) {
        return riesz_residual_norm(op, to_y(y), v);
      });

  py::class_<ReducedBasis>(m, "ReducedBasis")
      .def(py::init([](const OpPtr& op) { return ReducedBasis(op); }))
      .def_property_readonly("size", &ReducedBasis::size)
      .def_property_readonly("provenance", [](const ReducedBasis& rb) {
        std::vector<std::vector<double>> out;
        for (const auto& y : rb.provenance()) out.emplace_back(y.values().begin(), y.values().end());
        return out;
      })
      .def("extend", [](ReducedBasis& rb, const std::vector<double>& y) {
        const auto p = to_y(y);
        rb.extend(solve(rb.op(), p), p);
      })
      .def("gram", &ReducedBasis::gram)
      .def("project_error", [](const ReducedBasis& rb, const Vector& u) { return project_error(u, rb); })
      .def("online_solve", [](const ReducedBasis& rb, const std::vector<double>& y, bool lift) {
        auto s = online_solve(rb, to_y(y), lift);
        return lift ? py::cast(std::make_pair(s.coeffs, *s.lifted)) : py::cast(s.coeffs);
      }, py::arg("y"), py::arg("lift") = false)
      .def("save", [](const ReducedBasis& rb, const std::filesystem::path& p) { save_basis(rb, p); })
      .def_static("load", &load_basis);

  m.def("run_scheduled", [](const OpPtr& op, int n_max, double beta, const std::string& measure, std::uint64_t seed,
                            const std::string& selector) {
    Evaluator ev(op);
    RandomStream rng(seed);
    GreedyOptions opts;
    opts.selector = parse_selector(selector);
    py::gil_scoped_release release;
    auto res = run_scheduled(n_max, beta, parse_measure(measure), ev, rng, nullptr, opts);
    py::gil_scoped_acquire acquire;
    return py::make_tuple(std::move(res.basis), trace_dict(res.trace));
  }, py::arg("op"), py::arg("n_max"), py::arg("beta"), py::arg("measure") = "uniform", py::arg("seed") = 1,
     py::arg("selector") = "exact");

  m.def("run_certified", [](const OpPtr& op, double eps, double eta, double r, double m0, const std::string& measure,
                            std::uint64_t seed, long long max_training_size) {
    Evaluator ev(op);
    RandomStream rng(seed);
    const auto budget = make_budget(eps, eta, r, m0, parse_measure(measure));
    GreedyOptions opts;
    opts.max_training_size = max_training_size;
    py::gil_scoped_release release;
    auto res = run_certified(budget, ev, rng, nullptr, opts);
    py::gil_scoped_acquire acquire;
    return py::make_tuple(std::move(res.basis), trace_dict(res.trace));
  }, py::arg("op"), py::arg("epsilon"), py::arg("eta"), py::arg("r"), py::arg("m0"), py::arg("measure") = "uniform",
     py::arg("seed") = 1, py::arg("max_training_size") = 100'000'000LL);

  m.def("run_experiment", [](py::kwargs kw) {
    const auto c = config_from(kw);
    ExperimentResult res;
    {
      py::gil_scoped_release release;
      res = run_experiment(c);
    }
    py::list rows;
    for (const auto& r : res.curves.rows)
      rows.append(py::make_tuple(r.beta, r.realization, r.n, r.n_train, r.sigma_hat, r.sigma_val));
    return rows;
  });
}
