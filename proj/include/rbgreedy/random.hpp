#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace rbg {

// Seed derivation is a pure function of the master seed and a list of labels.
// Tags are namespaced strings ("train/...", "validation/...") so that streams
// for different roles never share a seed.

std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> labels = {});

/// Bit pattern of a double, for use as a seed label (e.g. a beta value).
std::uint64_t real_label(double v);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on [lo,hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t seed() const { return seed_; }
  /// Independent child stream, derived from this stream's seed and a label.
  RandomStream split(std::string_view tag, std::uint64_t label = 0) const {
    return RandomStream(derive_seed(seed_, tag, {label}));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace rbg
