#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "rbgreedy/random.hpp"

namespace rbg {

/// A point y of the parameter box Y = [-1,1]^d.
class ParameterVector {
 public:
  ParameterVector() = default;
  /// Throws InvalidArgument if a component leaves [-1,1] or is not finite.
  explicit ParameterVector(std::vector<double> values);

  static ParameterVector zeros(std::size_t d) { return ParameterVector(std::vector<double>(d, 0.0)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

/// Product measure on Y. Uniform: dy/2 per coordinate. Chebyshev: the
/// arcsine density 1/(pi sqrt(1-y^2)) per coordinate.
enum class SamplingMeasure { Uniform, Chebyshev };

SamplingMeasure parse_measure(std::string_view name);
std::string_view to_string(SamplingMeasure m);

/// a(y) = abar + sum_j y_j a_j chi_{D_j} on the unit square, where the D_j are
/// the cells of a k x k grid enumerated row-major: cell (ix, iy) with ix the
/// column (along x) and iy the row (along y), both counted from the origin, has
/// 0-based index iy*k + ix.
struct AffineCoefficientModel {
  double abar = 1.0;
  int k = 1;
  std::vector<double> amplitudes;
  double decay_t = 1.0;
  double delta = 0.0;

  std::size_t dim() const { return amplitudes.size(); }
  /// 0-based index of the cell containing x; points on cell boundaries go to
  /// the smaller index. Throws if x is outside ]0,1[^2.
  std::size_t cell_index(double x0, double x1) const;
  /// min over x of a(y)(x).
  double min_value(const ParameterVector& y) const;
  double max_value(const ParameterVector& y) const;
};

/// Checkerboard model with abar = 1 + delta and a_j = j^{-t}, j = 1..k^2.
AffineCoefficientModel build_checkerboard_model(int k, double t, double delta);

double coefficient_value(const AffineCoefficientModel& model, const ParameterVector& y,
                         double x0, double x1);

ParameterVector sample(SamplingMeasure measure, std::size_t d, RandomStream& rng);
std::vector<ParameterVector> sample_set(SamplingMeasure measure, std::size_t d, std::size_t count,
                                        RandomStream& rng);

/// Draw of a single coordinate from the measure's one-dimensional factor.
double sample_scalar(SamplingMeasure measure, RandomStream& rng);
/// CDF of the one-dimensional factor on [-1,1].
double measure_cdf(SamplingMeasure measure, double t);

}  // namespace rbg
