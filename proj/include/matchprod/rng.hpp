#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace matchprod {

// Derives a child seed from a parent seed and a path of integer keys, so that
// e.g. (sector, firm, year) streams are independent of how many siblings exist.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // [0,1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Strictly inside (0,1); safe for inverse-CDF transforms.
  double open_uniform();
  double normal(double mean = 0.0, double sd = 1.0);
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace matchprod
