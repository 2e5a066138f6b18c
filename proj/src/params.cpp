#include "rbgreedy/params.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rbgreedy/errors.hpp"

namespace rbg {

ParameterVector::ParameterVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= -1.0 && v <= 1.0)) {
      throw InvalidArgument("parameter component " + std::to_string(v) + " outside [-1,1]");
    }
  }
}

SamplingMeasure parse_measure(std::string_view name) {
  if (name == "uniform") return SamplingMeasure::Uniform;
  if (name == "chebyshev") return SamplingMeasure::Chebyshev;
  throw InvalidArgument("unknown sampling measure '" + std::string(name) + "'");
}

std::string_view to_string(SamplingMeasure m) {
  return m == SamplingMeasure::Uniform ? "uniform" : "chebyshev";
}

std::size_t AffineCoefficientModel::cell_index(double x0, double x1) const {
  if (!(x0 > 0.0 && x0 < 1.0 && x1 > 0.0 && x1 < 1.0)) {
    throw InvalidArgument("point outside the open unit square");
  }
  auto coord = [this](double x) {
    // ceil-1 sends a point on the line i/k to cell i-1.
    const int i = static_cast<int>(std::ceil(x * k)) - 1;
    return static_cast<std::size_t>(std::clamp(i, 0, k - 1));
  };
  return coord(x1) * static_cast<std::size_t>(k) + coord(x0);
}

double AffineCoefficientModel::min_value(const ParameterVector& y) const {
  double lo = abar;
  for (std::size_t j = 0; j < dim(); ++j) lo = std::min(lo, abar + y[j] * amplitudes[j]);
  return lo;
}

double AffineCoefficientModel::max_value(const ParameterVector& y) const {
  double hi = abar;
  for (std::size_t j = 0; j < dim(); ++j) hi = std::max(hi, abar + y[j] * amplitudes[j]);
  return hi;
}

AffineCoefficientModel build_checkerboard_model(int k, double t, double delta) {
  if (k <= 0) throw InvalidArgument("checkerboard grid k must be positive");
  if (!(t > 0.0)) throw InvalidArgument("decay t must be positive");
  if (!(delta > 0.0)) throw InvalidArgument("ellipticity margin delta must be positive");
  AffineCoefficientModel model;
  model.abar = 1.0 + delta;
  model.k = k;
  model.decay_t = t;
  model.delta = delta;
  const int d = k * k;
  model.amplitudes.resize(d);
  for (int j = 1; j <= d; ++j) model.amplitudes[j - 1] = std::pow(static_cast<double>(j), -t);
  return model;
}

double coefficient_value(const AffineCoefficientModel& model, const ParameterVector& y, double x0,
                         double x1) {
  if (y.size() != model.dim()) throw InvalidArgument("parameter dimension does not match model");
  const std::size_t j = model.cell_index(x0, x1);
  return model.abar + y[j] * model.amplitudes[j];
}

double sample_scalar(SamplingMeasure measure, RandomStream& rng) {
  if (measure == SamplingMeasure::Uniform) return rng.uniform(-1.0, 1.0);
  return std::cos(std::numbers::pi * rng.uniform01());
}

double measure_cdf(SamplingMeasure measure, double t) {
  t = std::clamp(t, -1.0, 1.0);
  if (measure == SamplingMeasure::Uniform) return 0.5 * (t + 1.0);
  return 1.0 - std::acos(t) / std::numbers::pi;
}

ParameterVector sample(SamplingMeasure measure, std::size_t d, RandomStream& rng) {
  std::vector<double> v(d);
  for (auto& x : v) x = sample_scalar(measure, rng);
  return ParameterVector(std::move(v));
}

std::vector<ParameterVector> sample_set(SamplingMeasure measure, std::size_t d, std::size_t count,
                                        RandomStream& rng) {
  if (count == 0) throw InvalidArgument("training set size must be at least 1");
  std::vector<ParameterVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample(measure, d, rng));
  return out;
}

}  // namespace rbg
