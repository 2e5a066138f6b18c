#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// None of these call into the library.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

namespace oracle {

inline double alpha_uniform() { return 1.0; }
inline double alpha_chebyshev() { return std::log(3.0) / (2.0 * std::log(2.0)); }

inline bool m_ok(long long m, double eps, double r, double m0, double a) {
  const long double mm = static_cast<long double>(m);
  const bool first = 32.0L * m0 * std::pow(mm, -static_cast<long double>(r) + 2.0L * a) <= eps;
  const bool second =
      std::pow(2.0L, 4.0L * r + 2.0L) * std::pow(mm, -(2.0L * a - 1.0L) * static_cast<long double>(r)) <= 1.0L;
  return first && second;
}

/// Smallest m satisfying both budget inequalities, by linear search.
inline long long brute_m(double eps, double r, double m0, double a, long long limit = 10'000'000) {
  for (long long m = 1; m <= limit; ++m)
    if (m_ok(m, eps, r, m0, a)) return m;
  return -1;
}

/// Smallest N with q^N <= eta / m^{2a}, q = 1 - 3/(4 m^{2a}), by repeated multiplication.
inline long long brute_n(long long m, double eta, double a, long long limit = 100'000'000) {
  const long double m2a = std::pow(static_cast<long double>(m), 2.0L * a);
  const long double q = 1.0L - 3.0L / (4.0L * m2a);
  const long double target = eta / m2a;
  long double p = 1.0L;
  for (long long n = 1; n <= limit; ++n) {
    p *= q;
    if (p <= target) return n;
  }
  return -1;
}

/// Standard Legendre P_k(t) by Bonnet's recursion, scaled to unit norm under dt/2.
inline double legendre(int k, double t) {
  double p0 = 1.0, p1 = t;
  if (k == 0) return 1.0;
  for (int j = 1; j < k; ++j) {
    const double p2 = ((2.0 * j + 1.0) * t * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return std::sqrt(2.0 * k + 1.0) * p1;
}

inline double chebyshev(int k, double t) {
  return k == 0 ? 1.0 : std::sqrt(2.0) * std::cos(k * std::acos(t));
}

/// Gauss-Legendre nodes and weights (weights sum to 1) by Golub-Welsch.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    j(i, i - 1) = j(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    w[i] = v * v;
  }
}

/// Gauss-Chebyshev (first kind) nodes, equal weights summing to 1.
inline void gauss_chebyshev(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 1.0 / n);
  for (int i = 0; i < n; ++i) x[i] = std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * n));
}

/// Every multi-index in the box [0, m-1]^d with prod(1+nu_j) <= m.
inline std::set<std::vector<int>> hyperbolic_cross(int m, int d) {
  std::set<std::vector<int>> out;
  std::vector<int> nu(d, 0);
  while (true) {
    long long prod = 1;
    for (int v : nu) prod *= (1 + v);
    if (prod <= m) out.insert(nu);
    int i = 0;
    while (i < d && ++nu[i] == m) nu[i++] = 0;
    if (i == d) break;
  }
  return out;
}

/// ||u - P u||_S where P projects onto span(cols of W) in the S inner product,
/// via the (non-orthonormal) Gram normal equations.
inline double gram_projection_error(const Eigen::VectorXd& u, const Eigen::MatrixXd& w, const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd g = w.transpose() * s * w;
  const Eigen::VectorXd b = w.transpose() * s * u;
  const Eigen::VectorXd c = g.ldlt().solve(b);
  const Eigen::VectorXd r = u - w * c;
  return std::sqrt(std::max(0.0, r.dot(s * r)));
}

inline double uniform_cdf(double t) { return 0.5 * (t + 1.0); }
inline double arcsine_cdf(double t) { return 1.0 - std::acos(t) / std::numbers::pi; }

}  // namespace oracle
