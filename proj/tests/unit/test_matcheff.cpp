#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "matchprod/error.hpp"
#include "matchprod/matcheff.hpp"
#include "matchprod/model.hpp"
#include "matchprod/synthgen.hpp"

using namespace matchprod;

namespace {

// Gaps following (gap - b0) = rho (gap - b0)_{t-1} + u from the stationary law.
std::vector<QualityRow> ar1_gaps(double b0, double rho, double sd_u, int firms, int years, std::uint64_t seed,
                                 std::int32_t sector = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::exponential_distribution<double> ex(2.0);
  std::vector<QualityRow> rows;
  for (int j = 0; j < firms; ++j) {
    double dev = n(rng) * sd_u / std::sqrt(1.0 - rho * rho);
    const double ln_x = ex(rng);
    for (int t = 0; t < years; ++t) {
      if (t > 0) dev = rho * dev + sd_u * n(rng);
      rows.push_back({j, sector, 2003 + t, ln_x + b0 + dev, ln_x});
    }
  }
  return rows;
}

std::vector<QualityRow> from_firms(const FirmPanel& firms) {
  std::vector<QualityRow> rows;
  for (const FirmYear& f : firms) rows.push_back({f.firm_id, f.sector, f.year, std::log(f.y), std::log(f.x)});
  return rows;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidParam;
}

}  // namespace

TEST_CASE("recovery of the intercept and persistence") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const MatchEffEstimate e = estimate_match_efficiency(ar1_gaps(0.1, 0.7, 0.1, 500, 12, seed));
    if (std::abs(e.b0_hat - 0.1) < 0.05 && std::abs(e.rho_x_hat - 0.7) < 0.05) ++ok;
    CHECK(!e.rho_outside_unit);
    CHECK(e.n_pairs == 500u * 11u);
  }
  CHECK(ok == 20);
}

TEST_CASE("omega_x is the gap net of the intercept") {
  const auto rows = ar1_gaps(0.3, 0.6, 0.1, 200, 6, 3);
  const MatchEffEstimate e = estimate_match_efficiency(rows);
  REQUIRE(e.omega_x.size() == rows.size());
  std::map<std::pair<int, int>, double> gap;
  for (const QualityRow& r : rows) gap[{r.firm_id, r.year}] = r.ln_y - r.ln_x;
  double mean = 0.0;
  for (const OmegaXRow& o : e.omega_x) {
    CHECK(o.omega_x == doctest::Approx(gap[{o.firm_id, o.year}] - e.b0_hat).epsilon(1e-14));
    mean += o.omega_x;
  }
  mean /= static_cast<double>(e.omega_x.size());
  CHECK(std::abs(mean) < 2.0 * 0.1 / std::sqrt(static_cast<double>(e.omega_x.size())) * 4.0);
}

TEST_CASE("IV closed form against a direct computation") {
  const auto rows = ar1_gaps(0.2, 0.5, 0.1, 50, 5, 4);
  const MatchEffEstimate e = estimate_match_efficiency(rows);
  // Exactly identified IV with instruments (1, lagged gap) equals OLS of the
  // gap on its lag.
  std::map<std::pair<int, int>, double> gap;
  for (const QualityRow& r : rows) gap[{r.firm_id, r.year}] = r.ln_y - r.ln_x;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& [key, g] : gap) {
    auto it = gap.find({key.first, key.second - 1});
    if (it == gap.end()) continue;
    sx += it->second, sy += g, sxx += it->second * it->second, sxy += it->second * g, ++n;
  }
  const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
  const double icpt = (sy - slope * sx) / n;
  CHECK(e.rho_x_hat == doctest::Approx(slope).epsilon(1e-12));
  CHECK(e.b0_hat == doctest::Approx(icpt / (1.0 - slope)).epsilon(1e-12));
}

TEST_CASE("constant gap") {
  const auto rows = ar1_gaps(0.25, 0.0, 0.0, 30, 5, 5);
  const MatchEffEstimate e = estimate_match_efficiency(rows);
  CHECK(e.constant_gap);
  CHECK(e.rho_x_hat == 0.0);
  CHECK(e.b0_hat == doctest::Approx(0.25).epsilon(1e-14));
  for (const OmegaXRow& o : e.omega_x) CHECK(std::abs(o.omega_x) < 1e-14);
}

TEST_CASE("common rescaling of qualities leaves the intercept unchanged") {
  auto rows = ar1_gaps(0.2, 0.7, 0.1, 200, 8, 6);
  const MatchEffEstimate a = estimate_match_efficiency(rows);
  for (QualityRow& r : rows) {
    r.ln_y += std::log(4.0);
    r.ln_x += std::log(4.0);
  }
  const MatchEffEstimate b = estimate_match_efficiency(rows);
  CHECK(b.b0_hat == doctest::Approx(a.b0_hat).epsilon(1e-12));
  CHECK(b.rho_x_hat == doctest::Approx(a.rho_x_hat).epsilon(1e-12));
}

TEST_CASE("model-generated panel") {
  SimConfig cfg;
  cfg.n_firms = 2000;
  cfg.years = 12;
  const FirmPanel firms = simulate_firm_panel(cfg);
  const auto rows = from_firms(firms);
  const MatchEffEstimate e = estimate_match_efficiency(rows);
  const ModelParams& p = cfg.sector_params[0];
  CHECK(std::abs(e.b0_hat - compute_constants(p).b0) < 0.05);
  CHECK(std::abs(e.rho_x_hat - p.rho_x) < 0.05);
  CHECK(std::abs(e.b1_hat - 1.0) < 0.02);

  std::vector<double> a, b;
  for (std::size_t i = 0; i < firms.size(); ++i) {
    a.push_back(e.omega_x[i].omega_x);
    b.push_back(firms[i].omega_x);
  }
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(sab / std::sqrt(saa * sbb) > 0.95);
}

TEST_CASE("declining match efficiency shows in the median") {
  SimConfig cfg;
  cfg.n_firms = 1000;
  cfg.years = 13;
  cfg.omega_x_drift = -0.005;
  const MatchEffEstimate e = estimate_match_efficiency(from_firms(simulate_firm_panel(cfg)));
  std::map<int, std::vector<double>> by_year;
  for (const OmegaXRow& o : e.omega_x) by_year[o.year].push_back(o.omega_x);
  std::vector<double> med;
  for (auto& [y, v] : by_year) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    med.push_back(v[v.size() / 2]);
  }
  CHECK(med.back() < med.front() - 0.04);
  int rises = 0;
  for (std::size_t i = 1; i < med.size(); ++i) rises += med[i] > med[i - 1];
  CHECK(rises <= 2);
}

TEST_CASE("per-sector estimates") {
  auto rows = ar1_gaps(0.1, 0.7, 0.1, 300, 10, 7, 0);
  const auto other = ar1_gaps(0.4, 0.6, 0.1, 300, 10, 8, 1);
  rows.insert(rows.end(), other.begin(), other.end());
  const auto est = estimate_match_efficiency_by_sector(rows);
  REQUIRE(est.size() == 2);
  CHECK(est[0].sector == 0);
  CHECK(std::abs(est[0].b0_hat - 0.1) < 0.05);
  CHECK(std::abs(est[1].b0_hat - 0.4) < 0.05);
  CHECK(std::abs(est[1].rho_x_hat - 0.6) < 0.05);
}

TEST_CASE("general slope check") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.1);
  std::exponential_distribution<double> ex(1.0);
  std::vector<QualityRow> rows;
  for (int j = 0; j < 2000; ++j) {
    const double lx = ex(rng);
    rows.push_back({j, j % 2, 2005, 0.5 * lx + n(rng), lx});
  }
  const SlopeCheck s = general_slope_check(rows);
  CHECK(std::abs(s.pooled - 0.5) < 0.02);
  REQUIRE(s.by_sector.size() == 2);
  for (const auto& [sector, b] : s.by_sector) CHECK(std::abs(b - 0.5) < 0.03);

  // One firm over two years still defines a slope; a single observation does not.
  std::vector<QualityRow> one{{1, 0, 2005, 1.0, 0.5}, {1, 0, 2006, 2.0, 1.0}};
  CHECK(general_slope_check(one).pooled == doctest::Approx(2.0));
  one.pop_back();
  CHECK(kind_of([&] { general_slope_check(one); }) == ErrorKind::TooFewObservations);
}

TEST_CASE("errors") {
  std::vector<QualityRow> single_year;
  for (int j = 0; j < 10; ++j) single_year.push_back({j, 0, 2005, 1.0 + 0.1 * j, 0.5});
  CHECK(kind_of([&] { estimate_match_efficiency(single_year); }) == ErrorKind::InsufficientPanel);
  std::vector<QualityRow> one_pair{{1, 0, 2005, 1.0, 0.5}, {1, 0, 2006, 1.2, 0.5}};
  CHECK(kind_of([&] { estimate_match_efficiency(one_pair); }) == ErrorKind::InsufficientPanel);
}
