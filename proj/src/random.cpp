#include "rbgreedy/random.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace rbg {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = mix64(master);
  // FNV-1a over the tag, folded through the mixer.
  std::uint64_t t = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    t ^= c;
    t *= 0x100000001b3ULL;
  }
  h = mix64(h ^ t);
  for (std::uint64_t l : labels) h = mix64(h ^ mix64(l + 0x632be59bd9b4e019ULL));
  return h;
}

std::uint64_t real_label(double v) { return std::bit_cast<std::uint64_t>(v); }

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double RandomStream::normal() {
  // Box-Muller; one value per call keeps the stream position simple.
  double u1;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rbg
