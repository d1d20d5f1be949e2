#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "matchprod/akm.hpp"
#include "matchprod/kernels.hpp"
#include "matchprod/synthgen.hpp"

using namespace matchprod;
namespace k = matchprod::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> v(n);
  for (double& a : v) a = d(rng);
  return v;
}

std::vector<std::int32_t> random_index(std::size_t n, std::size_t range, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int32_t> d(0, static_cast<std::int32_t>(range) - 1);
  std::vector<std::int32_t> v(n);
  for (auto& a : v) a = d(rng);
  return v;
}

// Reductions reorder additions; bound the gap by the rounding of |terms|.
double reduction_bound(const std::vector<double>& terms) {
  double s = 0.0;
  for (double t : terms) s += std::abs(t);
  return 4.0 * static_cast<double>(terms.size() + 1) * 2.2e-16 * s + 1e-300;
}

// Fused multiply-add rounds once instead of twice; the gap is bounded by the
// magnitude of the two terms, not of the result.
void check_fused(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& t1,
                 double c1, const std::vector<double>& t2, double c2) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 2.3e-16 * (std::abs(c1 * t1[i]) + std::abs(c2 * t2[i])));
  }
}

struct IsaGuard {
  k::Isa saved = k::active_isa();
  ~IsaGuard() { k::set_active_isa(saved); }
};

}  // namespace

TEST_CASE("variant selection") {
  IsaGuard g;
  CHECK(k::set_active_isa(k::Isa::Scalar) == k::Isa::Scalar);
  CHECK(k::active_isa() == k::Isa::Scalar);
  const k::Isa got = k::set_active_isa(k::Isa::Avx2);
  CHECK(got == k::detected_isa());
  CHECK(k::to_string(k::Isa::Avx2) == "avx2");
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  if (!k::avx2::compiled() || k::detected_isa() != k::Isa::Avx2) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  std::mt19937_64 rng(17);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u, 1000u, 4099u}) {
    CAPTURE(n);
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = a[i] * b[i];
    CHECK(std::abs(k::scalar::dot(a, b) - k::avx2::dot(a, b)) <= reduction_bound(prod));
    CHECK(std::abs(k::scalar::sum(a) - k::avx2::sum(a)) <= reduction_bound(a));

    auto y1 = b, y2 = b;
    k::scalar::axpy(0.37, a, y1);
    k::avx2::axpy(0.37, a, y2);
    check_fused(y1, y2, a, 0.37, b, 1.0);

    y1 = b, y2 = b;
    k::scalar::xpby(a, -1.3, y1);
    k::avx2::xpby(a, -1.3, y2);
    check_fused(y1, y2, a, 1.0, b, -1.3);

    std::vector<double> o1(n), o2(n);
    k::scalar::mul(a, b, o1);
    k::avx2::mul(a, b, o2);
    CHECK(o1 == o2);

    const std::size_t na = 13, nb = 29;
    const auto src_a = random_vector(na, rng);
    const auto src_b = random_vector(nb, rng);
    const auto ia = random_index(n, na, rng);
    const auto ib = random_index(n, nb, rng);
    k::scalar::gather_add(src_a, ia, src_b, ib, o1);
    k::avx2::gather_add(src_a, ia, src_b, ib, o2);
    CHECK(o1 == o2);

    o1 = a, o2 = a;
    k::scalar::gather_accumulate(src_a, ia, o1);
    k::avx2::gather_accumulate(src_a, ia, o2);
    CHECK(o1 == o2);
  }
}

TEST_CASE("dispatchers follow the active variant") {
  IsaGuard g;
  std::mt19937_64 rng(2);
  const auto a = random_vector(101, rng);
  k::set_active_isa(k::Isa::Scalar);
  CHECK(k::sum(a) == k::scalar::sum(a));
  if (k::set_active_isa(k::Isa::Avx2) == k::Isa::Avx2) CHECK(k::sum(a) == k::avx2::sum(a));
}

TEST_CASE("fixed-effects solver agrees across variants") {
  IsaGuard g;
  SimConfig cfg;
  cfg.n_firms = 60;
  cfg.years = 6;
  cfg.target_r2 = 0.8;
  const FirmPanel firms = simulate_firm_panel(cfg);
  const MatchTable m = largest_connected_set(simulate_worker_panel(firms, cfg).matches).matches;
  AkmSpec spec;
  spec.tolerance = 1e-13;
  k::set_active_isa(k::Isa::Scalar);
  const AkmEstimate s = estimate_akm(m, spec);
  k::set_active_isa(k::Isa::Avx2);
  const AkmEstimate v = estimate_akm(m, spec);
  REQUIRE(s.alpha.size() == v.alpha.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < s.alpha.size(); ++i) worst = std::max(worst, std::abs(s.alpha[i] - v.alpha[i]));
  for (std::size_t i = 0; i < s.psi.size(); ++i) worst = std::max(worst, std::abs(s.psi[i] - v.psi[i]));
  CHECK(worst < 1e-9);
}
