#include "matchprod/rng.hpp"

#include <cmath>
#include <numbers>

namespace matchprod {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t key : path) h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
  return h;
}

double RandomStream::open_uniform() {
  // 53 random bits mapped to the midpoints of a 2^-53 lattice: never 0 or 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Box-Muller with both variates consumed independently; avoids the
// implementation-defined std::normal_distribution so tables are portable.
double RandomStream::normal(double mean, double sd) {
  const double u1 = open_uniform();
  const double u2 = open_uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sd * z;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased and library-independent.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return v % n;
}

}  // namespace matchprod
