#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "rbgreedy/params.hpp"
#include "rbgreedy/random.hpp"

namespace rbg {

using MultiIndex = std::vector<int>;

/// A finite set of multi-indices of a common length d. Downward closedness is
/// not enforced by the type; see is_downward_closed().
class MultiIndexSet {
 public:
  MultiIndexSet() = default;
  explicit MultiIndexSet(std::size_t d) : d_(d) {}
  MultiIndexSet(std::size_t d, std::initializer_list<MultiIndex> indices);

  void insert(MultiIndex nu);
  bool contains(const MultiIndex& nu) const { return set_.count(nu) != 0; }
  std::size_t size() const { return set_.size(); }
  std::size_t dim() const { return d_; }
  int max_degree() const;

  auto begin() const { return set_.begin(); }
  auto end() const { return set_.end(); }

  friend bool operator==(const MultiIndexSet&, const MultiIndexSet&) = default;

 private:
  std::size_t d_ = 0;
  std::set<MultiIndex> set_;
};

enum class PolynomialBasis { Legendre, Chebyshev };

/// ln 3 / (2 ln 2): exponent in the Chebyshev Christoffel bound #(Lambda)^{2 alpha}.
double chebyshev_alpha();
/// 1 for the uniform measure, chebyshev_alpha() for the arcsine measure.
double measure_alpha(SamplingMeasure measure);
PolynomialBasis basis_for(SamplingMeasure measure);

bool is_downward_closed(const MultiIndexSet& set);

/// All nu in N^d with prod_j (1 + nu_j) <= m.
MultiIndexSet hyperbolic_cross(int m, std::size_t d);

/// Test generator: grows {0} by uniform choices from the admissible frontier.
MultiIndexSet random_downward_closed(std::size_t target_size, std::size_t d, RandomStream& rng);

/// Univariate orthonormal polynomials of degree 0..max_degree at t.
/// Legendre is normalized in L^2([-1,1], dt/2), Chebyshev in L^2 of the arcsine law.
void univariate_values(PolynomialBasis basis, int max_degree, double t, std::vector<double>& out);

double legendre_eval(const MultiIndex& nu, std::span<const double> y);
double chebyshev_eval(const MultiIndex& nu, std::span<const double> y);
double basis_eval(PolynomialBasis basis, const MultiIndex& nu, std::span<const double> y);

/// sum over nu in Lambda of basis_nu(y)^2. Throws InvalidArgument unless Lambda
/// is downward closed.
double christoffel_sum(const MultiIndexSet& lambda, std::span<const double> y, PolynomialBasis basis);

/// Scalar polynomial sum_nu c_nu basis_nu(y) on a downward closed set.
/// Coefficients are given in the set's lexicographic iteration order.
class LowerSetPolynomial {
 public:
  LowerSetPolynomial(MultiIndexSet lambda, std::vector<double> coeffs, PolynomialBasis basis);

  double operator()(std::span<const double> y) const;

  const MultiIndexSet& support() const { return lambda_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  PolynomialBasis basis() const { return basis_; }
  std::size_t dim() const { return lambda_.dim(); }
  std::size_t cardinality() const { return lambda_.size(); }
  /// The measure under which the basis is orthonormal.
  SamplingMeasure measure() const;
  /// Exact L^2 norm from orthonormality.
  double l2_norm() const;

 private:
  MultiIndexSet lambda_;
  std::vector<MultiIndex> indices_;
  std::vector<double> coeffs_;
  PolynomialBasis basis_;
  int max_degree_ = 0;
};

/// Estimate of sup_Y |P|: max over `n_candidates` Chebyshev-distributed points
/// plus the 2^min(d,10) sign-pattern corners.
double sup_norm_estimate(const LowerSetPolynomial& p, std::size_t n_candidates, RandomStream& rng);

struct NikolskiiEstimate {
  double sup_est = 0.0;
  double l2_est = 0.0;
  /// Standard error of l2_est (delta method on the mean of P^2).
  double l2_stderr = 0.0;
};

/// Sup estimate over `n_grid` candidates (0 selects 10*n_mc) and a Monte Carlo
/// L^2 estimate over n_mc draws from the basis' own measure.
NikolskiiEstimate nikolskii_check(const LowerSetPolynomial& p, std::size_t n_grid, std::size_t n_mc,
                                  RandomStream& rng);

struct SuperlevelEstimate {
  double measure = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  double sup_est = 0.0;
};

/// Monte Carlo estimate of rho({y : |P(y)| >= threshold_fraction * sup_est}).
/// threshold_fraction <= 0 selects 1/(2m).
SuperlevelEstimate superlevel_measure(const LowerSetPolynomial& p, double threshold_fraction,
                                      std::size_t n_mc, RandomStream& rng);

/// Everything the certified algorithm derives from (epsilon, eta, r, M0).
struct CertifiedBudget {
  double r = 0.0;
  double m0 = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  SamplingMeasure measure = SamplingMeasure::Uniform;
  long long m = 0;
  long long n_train = 0;
  double alpha = 1.0;

  /// epsilon / (8 m^alpha)
  double tolerance() const;
  /// floor(m^{2 alpha}), the step cap.
  long long step_cap() const;
};

/// Smallest m >= 1 with 32 M0 m^{-r+2a} <= eps and 2^{4r+2} m^{-(2a-1) r} <= 1.
long long compute_m(double epsilon, double r, double m0, SamplingMeasure measure);
/// Smallest N >= 1 with (1 - 3/(4 m^{2a}))^N <= eta / m^{2a}.
long long compute_n(long long m, double eta, SamplingMeasure measure);

bool m_conditions_hold(long long m, double epsilon, double r, double m0, SamplingMeasure measure);
bool n_condition_holds(long long n, long long m, double eta, SamplingMeasure measure);

CertifiedBudget make_budget(double epsilon, double eta, double r, double m0, SamplingMeasure measure);

}  // namespace rbg
