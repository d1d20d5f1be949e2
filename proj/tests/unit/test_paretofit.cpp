#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <functional>
#include <vector>

#include "matchprod/error.hpp"
#include "matchprod/model.hpp"
#include "matchprod/paretofit.hpp"
#include "matchprod/rng.hpp"
#include "matchprod/synthgen.hpp"

using namespace matchprod;

namespace {

// Values whose descending rank r satisfies (r - 0.5)/n = value^{-lambda}.
std::vector<double> quantile_grid(double lambda, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (std::size_t r = 1; r <= n; ++r) {
    v[r - 1] = scale * std::pow((static_cast<double>(r) - 0.5) / static_cast<double>(n), -1.0 / lambda);
  }
  return v;
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

TEST_CASE("exact quantile grid") {
  const TailFit fit = rank_regression(quantile_grid(2.0, 5000));
  CHECK(std::abs(fit.lambda_hat - 2.0) < 1e-3);
  CHECK(fit.r_squared > 0.9999);
  CHECK(fit.n_used == 5000);
  CHECK(fit.standard_error >= 0.0);
  CHECK(std::isinf(fit.threshold));
}

TEST_CASE("input order does not matter") {
  std::vector<double> v = quantile_grid(1.5, 200);
  const TailFit a = rank_regression(v);
  std::reverse(v.begin(), v.end());
  const TailFit b = rank_regression(v);
  CHECK(a.lambda_hat == doctest::Approx(b.lambda_hat).epsilon(1e-14));
}

TEST_CASE("scale invariance") {
  RandomStream rs(5);
  std::vector<double> v = draw_pareto(1.8, 1.0, 20000, rs);
  const TailFit a = rank_regression(v);
  for (double& x : v) x *= 7.5;
  const TailFit b = rank_regression(v);
  CHECK(b.lambda_hat == doctest::Approx(a.lambda_hat).epsilon(1e-10));
  CHECK(b.r_squared == doctest::Approx(a.r_squared).epsilon(1e-10));
}

TEST_CASE("threshold is monotone in observations used") {
  RandomStream rs(6);
  const std::vector<double> v = draw_pareto(1.8, 0.5, 20000, rs);
  std::size_t prev = v.size() + 1;
  for (double t : {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
    const TailFit fit = rank_regression(v, t);
    CHECK(fit.n_used <= prev);
    CHECK(fit.threshold == t);
    prev = fit.n_used;
  }
}

TEST_CASE("contaminated lower tail fits worse than the thresholded tail") {
  RandomStream rs(7);
  std::vector<double> v = draw_pareto(1.8, 1.0, 20000, rs);
  for (int i = 0; i < 10000; ++i) v.push_back(std::exp(rs.normal(-0.8, 0.3)));
  const TailFit full = rank_regression(v);
  const TailFit tail = rank_regression(v, 0.0);
  CHECK(full.r_squared < tail.r_squared);
  CHECK(std::abs(tail.lambda_hat - 1.8) < 0.05);
  CHECK(std::abs(full.lambda_hat - 1.8) > 0.1);
}

TEST_CASE("year dummies absorb year-specific scale and size") {
  std::vector<double> v = quantile_grid(2.0, 3000, 1.0);
  std::vector<int> years(v.size(), 2005);
  const std::vector<double> w = quantile_grid(2.0, 12000, 3.0);
  v.insert(v.end(), w.begin(), w.end());
  years.resize(v.size(), 2006);
  const TailFit fit = rank_regression_with_years(v, years);
  CHECK(std::abs(fit.lambda_hat - 2.0) < 1e-9);
  CHECK(fit.r_squared > 0.9999);
  CHECK(fit.n_used == 15000);
  // Pooling without dummies mixes the two ladders.
  CHECK(std::abs(rank_regression(v).lambda_hat - 2.0) > 1e-3);
  CHECK(kind_of([&] { rank_regression_with_years(v, std::vector<int>(3, 2005)); }) == ErrorKind::InvalidParam);
}

TEST_CASE("simulated top-worker types") {
  SimConfig cfg;
  cfg.n_firms = 20000;
  cfg.years = 3;
  const FirmPanel firms = simulate_firm_panel(cfg);
  std::vector<double> y;
  for (const FirmYear& f : firms)
    if (f.year == cfg.first_year) y.push_back(f.y);
  // Match efficiency blurs the body below exp(b0); fit the tail above it.
  const double threshold = compute_constants(cfg.sector_params[0]).b0 + 0.1;
  const TailFit fit = rank_regression(y, threshold);
  CHECK(std::abs(fit.lambda_hat - cfg.sector_params[0].lambda_y) < 0.05);
  CHECK(fit.r_squared > 0.99);
  CHECK(rank_regression(y).r_squared < fit.r_squared);
}

TEST_CASE("errors") {
  CHECK(kind_of([] { rank_regression(std::vector<double>(9, 2.0)); }) == ErrorKind::TooFewObservations);
  CHECK(kind_of([] { rank_regression(quantile_grid(2.0, 100), 10.0); }) == ErrorKind::TooFewObservations);
  std::vector<double> bad = quantile_grid(2.0, 100);
  bad[3] = 0.0;
  CHECK(kind_of([&] { rank_regression(bad); }) == ErrorKind::DomainError);
  bad[3] = -1.0;
  CHECK(kind_of([&] { rank_regression(bad); }) == ErrorKind::DomainError);
}
