#include "rbgreedy/polytools.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include "rbgreedy/errors.hpp"

namespace rbg {

MultiIndexSet::MultiIndexSet(std::size_t d, std::initializer_list<MultiIndex> indices) : d_(d) {
  for (const auto& nu : indices) insert(nu);
}

void MultiIndexSet::insert(MultiIndex nu) {
  if (nu.size() != d_) throw InvalidArgument("multi-index length does not match set dimension");
  for (int v : nu)
    if (v < 0) throw InvalidArgument("multi-index entries must be non-negative");
  set_.insert(std::move(nu));
}

int MultiIndexSet::max_degree() const {
  int deg = 0;
  for (const auto& nu : set_)
    for (int v : nu) deg = std::max(deg, v);
  return deg;
}

double chebyshev_alpha() { return std::log(3.0) / (2.0 * std::log(2.0)); }

double measure_alpha(SamplingMeasure measure) {
  return measure == SamplingMeasure::Uniform ? 1.0 : chebyshev_alpha();
}

PolynomialBasis basis_for(SamplingMeasure measure) {
  return measure == SamplingMeasure::Uniform ? PolynomialBasis::Legendre : PolynomialBasis::Chebyshev;
}

bool is_downward_closed(const MultiIndexSet& set) {
  MultiIndex parent;
  for (const auto& nu : set) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      if (nu[j] == 0) continue;
      parent = nu;
      --parent[j];
      if (!set.contains(parent)) return false;
    }
  }
  return true;
}

namespace {

void cross_dfs(int m, std::size_t j, long long product, MultiIndex& nu, MultiIndexSet& out) {
  if (j == nu.size()) {
    out.insert(nu);
    return;
  }
  for (int v = 0; product * (1 + v) <= m; ++v) {
    nu[j] = v;
    cross_dfs(m, j + 1, product * (1 + v), nu, out);
  }
  nu[j] = 0;
}

bool admissible(const MultiIndexSet& set, const MultiIndex& nu) {
  MultiIndex parent;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    if (nu[j] == 0) continue;
    parent = nu;
    --parent[j];
    if (!set.contains(parent)) return false;
  }
  return true;
}

}  // namespace

MultiIndexSet hyperbolic_cross(int m, std::size_t d) {
  if (m < 1 || d < 1) throw InvalidArgument("hyperbolic_cross needs m >= 1 and d >= 1");
  MultiIndexSet out(d);
  MultiIndex nu(d, 0);
  cross_dfs(m, 0, 1, nu, out);
  return out;
}

MultiIndexSet random_downward_closed(std::size_t target_size, std::size_t d, RandomStream& rng) {
  if (target_size < 1 || d < 1) throw InvalidArgument("random_downward_closed needs size >= 1, d >= 1");
  MultiIndexSet set(d);
  std::set<MultiIndex> frontier;
  auto add = [&](const MultiIndex& nu) {
    set.insert(nu);
    frontier.erase(nu);
    for (std::size_t j = 0; j < d; ++j) {
      MultiIndex child = nu;
      ++child[j];
      if (!set.contains(child) && admissible(set, child)) frontier.insert(child);
    }
  };
  add(MultiIndex(d, 0));
  while (set.size() < target_size) {
    auto it = frontier.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(frontier.size())));
    add(MultiIndex(*it));
  }
  return set;
}

void univariate_values(PolynomialBasis basis, int max_degree, double t, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(max_degree) + 1, 0.0);
  out[0] = 1.0;
  if (max_degree == 0) return;
  if (basis == PolynomialBasis::Legendre) {
    // Standard recurrence on P_k, then scale by sqrt(2k+1).
    double p_prev = 1.0, p = t;
    out[1] = std::sqrt(3.0) * t;
    for (int k = 1; k < max_degree; ++k) {
      const double p_next = ((2.0 * k + 1.0) * t * p - k * p_prev) / (k + 1.0);
      p_prev = p;
      p = p_next;
      out[k + 1] = std::sqrt(2.0 * (k + 1) + 1.0) * p;
    }
  } else {
    double t_prev = 1.0, tk = t;
    out[1] = std::sqrt(2.0) * t;
    for (int k = 1; k < max_degree; ++k) {
      const double t_next = 2.0 * t * tk - t_prev;
      t_prev = tk;
      tk = t_next;
      out[k + 1] = std::sqrt(2.0) * tk;
    }
  }
}

double basis_eval(PolynomialBasis basis, const MultiIndex& nu, std::span<const double> y) {
  if (nu.size() > y.size()) throw InvalidArgument("multi-index longer than parameter vector");
  double v = 1.0;
  std::vector<double> vals;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    if (nu[j] == 0) continue;
    univariate_values(basis, nu[j], y[j], vals);
    v *= vals[nu[j]];
  }
  return v;
}

double legendre_eval(const MultiIndex& nu, std::span<const double> y) {
  return basis_eval(PolynomialBasis::Legendre, nu, y);
}

double chebyshev_eval(const MultiIndex& nu, std::span<const double> y) {
  return basis_eval(PolynomialBasis::Chebyshev, nu, y);
}

namespace {

// Per-coordinate tables of univariate values, reused across all indices.
class UnivariateTable {
 public:
  UnivariateTable(PolynomialBasis basis, std::size_t d, int max_degree)
      : basis_(basis), d_(d), stride_(static_cast<std::size_t>(max_degree) + 1),
        values_(d * stride_) {}

  void fill(std::span<const double> y) {
    for (std::size_t j = 0; j < d_; ++j) {
      univariate_values(basis_, static_cast<int>(stride_) - 1, y[j], scratch_);
      std::copy(scratch_.begin(), scratch_.end(), values_.begin() + j * stride_);
    }
  }

  double product(const MultiIndex& nu) const {
    double v = 1.0;
    for (std::size_t j = 0; j < d_; ++j)
      if (nu[j] != 0) v *= values_[j * stride_ + nu[j]];
    return v;
  }

 private:
  PolynomialBasis basis_;
  std::size_t d_;
  std::size_t stride_;
  std::vector<double> values_;
  std::vector<double> scratch_;
};

}  // namespace

double christoffel_sum(const MultiIndexSet& lambda, std::span<const double> y, PolynomialBasis basis) {
  if (!is_downward_closed(lambda)) {
    throw InvalidArgument("christoffel_sum requires a downward closed index set");
  }
  if (y.size() != lambda.dim()) throw InvalidArgument("parameter dimension mismatch");
  UnivariateTable table(basis, lambda.dim(), lambda.max_degree());
  table.fill(y);
  double sum = 0.0;
  for (const auto& nu : lambda) {
    const double v = table.product(nu);
    sum += v * v;
  }
  return sum;
}

LowerSetPolynomial::LowerSetPolynomial(MultiIndexSet lambda, std::vector<double> coeffs,
                                       PolynomialBasis basis)
    : lambda_(std::move(lambda)), indices_(lambda_.begin(), lambda_.end()), coeffs_(std::move(coeffs)),
      basis_(basis), max_degree_(lambda_.max_degree()) {
  if (coeffs_.size() != lambda_.size()) throw InvalidArgument("one coefficient per index required");
  if (lambda_.size() == 0 || !is_downward_closed(lambda_)) {
    throw InvalidArgument("polynomial support must be a nonempty downward closed set");
  }
}

double LowerSetPolynomial::operator()(std::span<const double> y) const {
  if (y.size() != dim()) throw InvalidArgument("parameter dimension mismatch");
  thread_local std::vector<double> table;
  thread_local std::vector<double> scratch;
  const std::size_t stride = static_cast<std::size_t>(max_degree_) + 1;
  table.resize(dim() * stride);
  for (std::size_t j = 0; j < dim(); ++j) {
    univariate_values(basis_, max_degree_, y[j], scratch);
    std::copy(scratch.begin(), scratch.end(), table.begin() + j * stride);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    double v = coeffs_[i];
    const auto& nu = indices_[i];
    for (std::size_t j = 0; j < nu.size(); ++j)
      if (nu[j] != 0) v *= table[j * stride + nu[j]];
    sum += v;
  }
  return sum;
}

SamplingMeasure LowerSetPolynomial::measure() const {
  return basis_ == PolynomialBasis::Legendre ? SamplingMeasure::Uniform : SamplingMeasure::Chebyshev;
}

double LowerSetPolynomial::l2_norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

double sup_norm_estimate(const LowerSetPolynomial& p, std::size_t n_candidates, RandomStream& rng) {
  const std::size_t d = p.dim();
  std::vector<double> y(d);
  double best = 0.0;
  const std::size_t corner_bits = std::min<std::size_t>(d, 10);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << corner_bits); ++mask) {
    for (std::size_t j = 0; j < d; ++j) y[j] = (j < corner_bits && ((mask >> j) & 1U)) ? -1.0 : 1.0;
    best = std::max(best, std::abs(p(y)));
  }
  for (std::size_t i = 0; i < n_candidates; ++i) {
    for (auto& v : y) v = sample_scalar(SamplingMeasure::Chebyshev, rng);
    best = std::max(best, std::abs(p(y)));
  }
  return best;
}

NikolskiiEstimate nikolskii_check(const LowerSetPolynomial& p, std::size_t n_grid, std::size_t n_mc,
                                  RandomStream& rng) {
  if (n_mc == 0) throw InvalidArgument("nikolskii_check needs n_mc >= 1");
  if (n_grid == 0) n_grid = 10 * n_mc;
  RandomStream sup_rng = rng.split("nikolskii/sup");
  RandomStream mc_rng = rng.split("nikolskii/l2");
  NikolskiiEstimate out;
  out.sup_est = sup_norm_estimate(p, n_grid, sup_rng);
  const auto measure = p.measure();
  std::vector<double> y(p.dim());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    for (auto& v : y) v = sample_scalar(measure, mc_rng);
    const double val = p(y);
    const double sq = val * val;
    const double delta = sq - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (sq - mean);
  }
  const double var = n_mc > 1 ? m2 / static_cast<double>(n_mc - 1) : 0.0;
  out.l2_est = std::sqrt(mean);
  const double se_mean = std::sqrt(var / static_cast<double>(n_mc));
  out.l2_stderr = out.l2_est > 0.0 ? se_mean / (2.0 * out.l2_est) : std::sqrt(se_mean);
  return out;
}

SuperlevelEstimate superlevel_measure(const LowerSetPolynomial& p, double threshold_fraction,
                                      std::size_t n_mc, RandomStream& rng) {
  if (n_mc == 0) throw InvalidArgument("superlevel_measure needs n_mc >= 1");
  const double alpha = measure_alpha(p.measure());
  if (threshold_fraction <= 0.0) {
    threshold_fraction = 1.0 / (2.0 * std::pow(static_cast<double>(p.cardinality()), alpha));
  }
  RandomStream sup_rng = rng.split("superlevel/sup");
  RandomStream mc_rng = rng.split("superlevel/mc");
  SuperlevelEstimate out;
  out.sup_est = sup_norm_estimate(p, 10 * n_mc, sup_rng);
  out.threshold = threshold_fraction * out.sup_est;
  std::vector<double> y(p.dim());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    for (auto& v : y) v = sample_scalar(p.measure(), mc_rng);
    if (std::abs(p(y)) >= out.threshold) ++hits;
  }
  out.measure = static_cast<double>(hits) / static_cast<double>(n_mc);
  out.stderr_ = std::sqrt(out.measure * (1.0 - out.measure) / static_cast<double>(n_mc));
  return out;
}

namespace {

void check_rate(double r, SamplingMeasure measure) {
  const double threshold = 2.0 * measure_alpha(measure);
  if (!(r > threshold)) {
    throw InvalidArgument("approximation rate r=" + std::to_string(r) + " must exceed " +
                          std::to_string(threshold));
  }
}

constexpr long long kMaxCount = 1LL << 60;

}  // namespace

bool m_conditions_hold(long long m, double epsilon, double r, double m0, SamplingMeasure measure) {
  const double a = measure_alpha(measure);
  const double md = static_cast<double>(m);
  return 32.0 * m0 * std::pow(md, -r + 2.0 * a) <= epsilon &&
         std::pow(2.0, 4.0 * r + 2.0) * std::pow(md, -(2.0 * a - 1.0) * r) <= 1.0;
}

long long compute_m(double epsilon, double r, double m0, SamplingMeasure measure) {
  check_rate(r, measure);
  if (!(epsilon > 0.0) || !(m0 > 0.0)) throw InvalidArgument("epsilon and M0 must be positive");
  const double a = measure_alpha(measure);
  const double guess1 = std::pow(32.0 * m0 / epsilon, 1.0 / (r - 2.0 * a));
  const double guess2 = std::pow(2.0, (4.0 * r + 2.0) / ((2.0 * a - 1.0) * r));
  const double guess = std::max({1.0, std::ceil(guess1), std::ceil(guess2)});
  if (!(guess < static_cast<double>(kMaxCount))) {
    throw ResourceError("m overflows the supported range (m ~ " + std::to_string(guess) + ")",
                        std::numeric_limits<long long>::max(), 0);
  }
  auto m = static_cast<long long>(guess);
  while (m > 1 && m_conditions_hold(m - 1, epsilon, r, m0, measure)) --m;
  while (!m_conditions_hold(m, epsilon, r, m0, measure)) ++m;
  return m;
}

bool n_condition_holds(long long n, long long m, double eta, SamplingMeasure measure) {
  const double m2a = std::pow(static_cast<double>(m), 2.0 * measure_alpha(measure));
  return std::pow(1.0 - 3.0 / (4.0 * m2a), static_cast<double>(n)) <= eta / m2a;
}

long long compute_n(long long m, double eta, SamplingMeasure measure) {
  if (m < 1) throw InvalidArgument("compute_n needs m >= 1");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0,1)");
  const double m2a = std::pow(static_cast<double>(m), 2.0 * measure_alpha(measure));
  const double guess = std::ceil(std::log(eta / m2a) / std::log1p(-3.0 / (4.0 * m2a)));
  if (!(guess < static_cast<double>(kMaxCount))) {
    throw ResourceError("training set size overflows the supported range", m, 0);
  }
  auto n = std::max(1LL, static_cast<long long>(guess));
  while (n > 1 && n_condition_holds(n - 1, m, eta, measure)) --n;
  while (!n_condition_holds(n, m, eta, measure)) ++n;
  return n;
}

double CertifiedBudget::tolerance() const {
  return epsilon / (8.0 * std::pow(static_cast<double>(m), alpha));
}

long long CertifiedBudget::step_cap() const {
  if (alpha == 1.0) return m * m;
  return static_cast<long long>(std::floor(std::pow(static_cast<double>(m), 2.0 * alpha)));
}

CertifiedBudget make_budget(double epsilon, double eta, double r, double m0, SamplingMeasure measure) {
  CertifiedBudget b;
  b.r = r;
  b.m0 = m0;
  b.epsilon = epsilon;
  b.eta = eta;
  b.measure = measure;
  b.alpha = measure_alpha(measure);
  b.m = compute_m(epsilon, r, m0, measure);
  b.n_train = compute_n(b.m, eta, measure);
  return b;
}

}  // namespace rbg
