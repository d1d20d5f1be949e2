#include "doctest.h"

#include <cmath>
#include <random>

#include "matchprod/error.hpp"
#include "matchprod/model.hpp"
#include "oracles.hpp"

using namespace matchprod;

namespace {

ModelParams symmetric() {
  ModelParams p;
  p.alpha_x = p.alpha_y = 0.5;
  p.alpha_l = 0.5;
  p.lambda_x = p.lambda_y = 2.0;
  p.x_min = p.y_min = 1.0;
  p.theta = 0.4;
  p.sigma = 2.0;
  return p;
}

ModelParams construction() {
  ModelParams p;
  p.theta = 0.417;
  p.alpha_l = 0.777;
  p.lambda_x = 2.06;
  p.lambda_y = 1.48;
  p.alpha_x = p.alpha_y = 0.5;
  return p;
}

std::vector<ModelParams> pam_sets() {
  std::vector<ModelParams> out;
  out.push_back(ModelParams{});
  ModelParams p;
  p.theta = 0.6, p.alpha_l = 0.6, p.lambda_x = 2.0, p.lambda_y = 1.5, p.sigma = 2.0;
  out.push_back(p);
  p = ModelParams{};
  p.theta = 0.5, p.alpha_l = 0.5, p.lambda_x = 1.5, p.lambda_y = 2.2, p.sigma = 1.5;
  out.push_back(p);
  p = ModelParams{};
  p.theta = 0.2, p.alpha_l = 0.3, p.lambda_x = 2.0, p.lambda_y = 2.0, p.sigma = 3.0, p.alpha_x = 0.3, p.alpha_y = 0.7;
  out.push_back(p);
  p = ModelParams{};
  p.theta = 1.6, p.alpha_l = 0.8, p.lambda_x = 3.0, p.lambda_y = 1.2, p.sigma = 6.0;
  out.push_back(p);
  p = ModelParams{};
  p.theta = -0.5, p.alpha_l = 0.5, p.lambda_x = 2.5, p.lambda_y = 2.0, p.sigma = 0.5;
  out.push_back(p);
  return out;
}

}  // namespace

TEST_CASE("symmetric parameters give a unit matching constant") {
  const EquilibriumConstants c = compute_constants(symmetric());
  CHECK(c.psi == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(c.b0) < 1e-15);
  CHECK(c.b_exponent == 1.0);
  CHECK(match_T(3.0, 0.0, c) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(match_T(3.0, std::log(2.0), c) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(inverse_match(3.0, 0.0, c) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(inverse_match(4.0, std::log(2.0), c) == doctest::Approx(2.0).epsilon(1e-15));
  for (double x : {1.0, 2.5, 40.0}) CHECK(labor_demand(x, 0.0, c, symmetric()) == doctest::Approx(1.0));
}

TEST_CASE("zero denominator is degenerate") {
  ModelParams p = construction();
  p.lambda_y = 2.06 + 0.417 / (1.0 - 0.777);
  try {
    compute_constants(p);
    FAIL("expected DivisionDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DivisionDegenerate);
  }
}

TEST_CASE("negative matching constant is a PAM violation") {
  ModelParams p = construction();
  p.theta = 0.1;  // theta/alpha_l + lambda_y - lambda_x < 0
  CHECK(!pam_check(p).sufficient_ok);
  try {
    compute_constants(p);
    FAIL("expected PamViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PamViolation);
  }
}

TEST_CASE("construction calibration with the full-sample top exponent violates PAM") {
  const ModelParams p = construction();
  CHECK(!pam_check(p).sufficient_ok);
  CHECK(oracle::psi_derived(p) < 0.0);
  try {
    compute_constants(p);
    FAIL("expected PamViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PamViolation);
  }
}

TEST_CASE("construction calibration with the thresholded top exponent") {
  ModelParams p = construction();
  p.lambda_y = 1.80;
  const EquilibriumConstants c = compute_constants(p);
  CHECK(c.psi == doctest::Approx(oracle::psi_derived(p)).epsilon(1e-14));
  CHECK(c.psi == doctest::Approx(0.1298992).epsilon(1e-6));
  const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
  const double a = slope_factor(0.0, c);
  const auto r = oracle::foc_ode_residual([a](long double x) { return a * x; }, [a](long double) { return a; },
                                          oracle::ces(p, 0.0, 0.0), p, grid);
  CHECK(oracle::max_abs(r) < 1e-8);
}

TEST_CASE("PAM conditions") {
  ModelParams p;
  p.theta = 0.417;
  p.sigma = 1.5;
  CHECK(pam_check(p).necessary_ok);
  p.sigma = 0.5;
  CHECK(!pam_check(p).necessary_ok);
  p.lambda_x = p.lambda_y = 1.7;
  for (double th : {-2.0, -0.1, 0.1, 3.0}) {
    p.theta = th;
    CHECK(pam_check(p).sufficient_ok);
  }
  for (const ModelParams& q : pam_sets()) {
    REQUIRE(pam_check(q).sufficient_ok);
    CHECK(compute_constants(q).psi > 0.0);
  }
}

TEST_CASE("closed-form matching passes both ODE checks") {
  for (const ModelParams& p : pam_sets()) {
    const EquilibriumConstants c = compute_constants(p);
    const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
    for (double ox : {0.0, 0.3}) {
      const long double a = slope_factor(ox, c);
      const auto lib = ode_residual([a](long double x) { return a * x; }, grid, p, ProductionForm::Ces, ox);
      CHECK(oracle::max_abs(lib) < 1e-8);
      const auto foc = oracle::foc_ode_residual([a](long double x) { return a * x; },
                                                [a](long double) { return a; }, oracle::ces(p, 0.1, ox), p, grid);
      CHECK(oracle::max_abs(foc) < 1e-8);
    }
  }
}

TEST_CASE("non-unit exponent under CES fails the ODE") {
  const ModelParams p;
  const EquilibriumConstants c = compute_constants(p);
  const long double a = slope_factor(0.0, c);
  const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
  auto T = [a](long double x) { return a * std::pow(x, 1.1L); };
  auto Tp = [a](long double x) { return 1.1L * a * std::pow(x, 0.1L); };
  CHECK(oracle::max_abs(ode_residual(T, grid, p, ProductionForm::Ces)) > 1e-2);
  CHECK(oracle::max_abs(oracle::foc_ode_residual(T, Tp, oracle::ces(p, 0.0, 0.0), p, grid)) > 1e-2);
}

TEST_CASE("alternative matching constant fails the ODE") {
  for (const ModelParams& p : pam_sets()) {
    if (p.lambda_x == p.lambda_y) continue;
    const double psi = oracle::psi_alternative(p);
    if (!(psi > 0.0)) continue;  // no matching function at all
    const long double a = std::pow(psi, 1.0 / (1.0 - p.sigma));
    const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
    CHECK(oracle::max_abs(oracle::foc_ode_residual([a](long double x) { return a * x; },
                                                   [a](long double) { return a; }, oracle::ces(p, 0.0, 0.0), p,
                                                   grid)) > 1e-4);
  }
}

TEST_CASE("ODE oracle needs five points") {
  const std::vector<double> grid{1.0, 2.0, 3.0, 4.0};
  try {
    ode_residual([](long double x) { return x; }, grid, ModelParams{}, ProductionForm::Ces);
    FAIL("expected GridTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooSmall);
  }
}

TEST_CASE("inverse matching round trip") {
  const ModelParams p;
  const EquilibriumConstants c = compute_constants(p);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(1.0, 1000.0), uo(-0.5, 0.5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(rng), ox = uo(rng);
    worst = std::max(worst, std::abs(inverse_match(match_T(x, ox, c), ox, c) - x) / x);
  }
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS(match_T(0.5, 0.0, c), Error);
  CHECK_THROWS_AS(inverse_match(0.1, 0.0, c), Error);
}

TEST_CASE("labor demand is decreasing when the top tail is heavier") {
  const ModelParams p = construction();
  ModelParams q = p;
  q.theta = 0.6;  // restores the sufficient condition at lambda_y = 1.48
  const EquilibriumConstants c = compute_constants(q);
  const auto grid = log_grid(1.0, 100.0, 50);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(labor_demand(grid[i], 0.0, c, q) < labor_demand(grid[i - 1], 0.0, c, q));
  }
}

TEST_CASE("wage properties") {
  const ModelParams p;
  const EquilibriumConstants c = compute_constants(p);
  const double e = wage_type_elasticity(p);
  CHECK(wage(p.x_min, 0.0, 0.0, c, p) == doctest::Approx(c.lambda_wage * std::pow(p.x_min, e)));
  CHECK(std::log(wage(2.0, 0.7, 0.1, c, p)) - std::log(wage(2.0, 0.0, 0.1, c, p)) ==
        doctest::Approx(0.7).epsilon(1e-14));
  CHECK(wage(3.0, 0.0, 0.0, c, p) > wage(2.0, 0.0, 0.0, c, p));
}

TEST_CASE("first-order conditions and market clearing at random states") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(1.0, 50.0), uo(-0.3, 0.3);
  for (ModelParams p : pam_sets()) {
    const EquilibriumConstants c = compute_constants(p);
    p.y_min = slope_factor(0.0, c) * p.x_min;  // supports line up under the matching
    const EquilibriumConstants cc = compute_constants(p);
    for (int i = 0; i < 20; ++i) {
      const double x = ux(rng), om = uo(rng), ox = uo(rng);
      const auto tech = oracle::ces(p, om, ox);
      const double y = match_T(x, ox, cc);
      const double l = labor_demand(x, ox, cc, p);
      const double w = wage(x, om, ox, cc, p);
      const double h = x * 1e-5;
      const double wp = (wage(x + h, om, ox, cc, p) - wage(x - h, om, ox, cc, p)) / (2 * h);
      const double tp = (match_T(x + h, ox, cc) - match_T(x - h, ox, cc)) / (2 * h);
      const double fx = static_cast<double>(tech.f_x(x, y, l));
      const double fl = static_cast<double>(tech.f_l(x, y, l));
      CHECK(std::abs(fx - wp * l) / fx < 1e-8);
      CHECK(std::abs(fl - w) / w < 1e-8);
      const double hx = static_cast<double>(oracle::density_ratio(p, x, y));
      CHECK(std::abs(tp * l - hx) / hx < 1e-8);
    }
  }
}

TEST_CASE("market clearing under quadrature") {
  for (ModelParams p : pam_sets()) {
    const EquilibriumConstants c0 = compute_constants(p);
    p.y_min = slope_factor(0.0, c0) * p.x_min;
    const EquilibriumConstants c = compute_constants(p);
    for (double ox : {0.0, 0.2}) {
      if (ox != 0.0) {
        p.y_min = slope_factor(ox, c) * p.x_min;
      }
      const EquilibriumConstants cc = compute_constants(p);
      auto T = [&](double x) { return match_T(x, ox, cc); };
      auto Ti = [&](double y) { return inverse_match(y, ox, cc); };
      auto L = [&](double x) { return labor_demand(x, ox, cc, p); };
      for (double x : log_grid(p.x_min, 50 * p.x_min, 10)) {
        const double supply = oracle::supply_above(p, x);
        CHECK(supply == doctest::Approx(std::pow(p.x_min / x, p.lambda_x)).epsilon(1e-9));
        CHECK(std::abs(oracle::demand_above(p, x, T, Ti, L) - supply) / supply < 1e-6);
      }
    }
  }
}

TEST_CASE("free-form and matched output agree on the matching locus") {
  const ModelParams p;
  const EquilibriumConstants c = compute_constants(p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(1.0, 30.0), uo(-0.5, 0.5), ul(2.0, 40.0);
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), om = uo(rng), ox = uo(rng), l = ul(rng), k = ul(rng);
    const double free = output_ces(om, ox, x, match_T(x, ox, c), l, k, p);
    CHECK(std::abs(free - output_matched(om, ox, x, l, k, p, c)) / free < 1e-10);
  }
  CHECK(output_ces(std::log(2.0), 0.0, 2.0, 3.0, 5.0, 7.0, p) ==
        doctest::Approx(2.0 * output_ces(0.0, 0.0, 2.0, 3.0, 5.0, 7.0, p)).epsilon(1e-14));
  CHECK_THROWS_AS(output_ces(0.0, 0.0, -1.0, 3.0, 5.0, 7.0, p), Error);
}

TEST_CASE("CES composite near sigma = 1 approaches Cobb-Douglas") {
  ModelParams p;
  p.alpha_x = 0.4;
  p.alpha_y = 0.6;
  const double x = 2.0, y = 5.0, l = 3.0;
  const double share = p.alpha_x / (p.alpha_x + p.alpha_y);
  for (double s : {1.0 - 1e-6, 1.0 + 1e-6}) {
    p.sigma = s;
    const double ces = output_ces(0.0, 0.0, x, y, l, 1.0, p);
    const double cd = std::pow(p.alpha_x + p.alpha_y, p.theta / (1.0 - s)) *
                      std::pow(std::pow(x, share) * std::pow(y, 1.0 - share), p.theta) * std::pow(l, p.alpha_l);
    CHECK(std::abs(ces / cd - 1.0) < 1e-4);
  }
}

TEST_CASE("Cobb-Douglas constants") {
  ModelParams p;
  p.alpha_l = 0.6;
  p.lambda_x = 2.0;
  p.lambda_y = 1.5;
  p.beta_x_cd = 0.3;
  p.beta_y_cd = 0.3;
  const CdConstants cd = cd_constants(p, 0.0);
  CHECK(cd.b == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cd_pam_condition(p));
  const double d = (1 - p.alpha_l) * p.lambda_y - p.beta_y_cd;
  CHECK(std::log(cd_constants(p, 0.5).a) - std::log(cd.a) == doctest::Approx(0.5 / d).epsilon(1e-12));

  p.beta_x_cd = p.alpha_l * p.lambda_x;  // B = 0
  try {
    cd_constants(p, 0.0);
    FAIL("expected PamViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PamViolation);
  }
  p.beta_x_cd = 0.3;
  p.beta_y_cd = (1 - p.alpha_l) * p.lambda_y;
  try {
    cd_constants(p, 0.0);
    FAIL("expected DivisionDegenerate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DivisionDegenerate);
  }
}

TEST_CASE("Cobb-Douglas closed form passes both ODE checks") {
  std::vector<ModelParams> sets(3);
  sets[0].alpha_l = 0.6, sets[0].lambda_x = 2.0, sets[0].lambda_y = 1.5, sets[0].beta_x_cd = 0.3, sets[0].beta_y_cd = 0.3;
  sets[1].beta_x_cd = 0.3, sets[1].beta_y_cd = 0.3;
  sets[2].alpha_l = 0.5, sets[2].lambda_x = 3.0, sets[2].lambda_y = 2.5, sets[2].beta_x_cd = 0.5, sets[2].beta_y_cd = 0.4;
  for (const ModelParams& p : sets) {
    REQUIRE(cd_pam_condition(p));
    for (double eta : {0.0, 0.4}) {
      const CdConstants cd = cd_constants(p, eta);
      const long double a = cd.a, b = cd.b;
      auto T = [a, b](long double x) { return a * std::pow(x, b); };
      auto Tp = [a, b](long double x) { return a * b * std::pow(x, b - 1); };
      const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
      CHECK(oracle::max_abs(ode_residual(T, grid, p, ProductionForm::CobbDouglas)) < 1e-8);
      CHECK(oracle::max_abs(oracle::foc_ode_residual(T, Tp, oracle::cobb_douglas(p, eta), p, grid)) < 1e-8);
      auto Tbad = [a, b](long double x) { return a * std::pow(x, b * 1.1L); };
      CHECK(oracle::max_abs(ode_residual(Tbad, grid, p, ProductionForm::CobbDouglas)) > 1e-3);
    }
  }
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.alpha_l = 1.0;
  CHECK_THROWS_AS(validate(p), Error);
  p = ModelParams{};
  p.sigma = 1.0;
  CHECK_THROWS_AS(validate(p, ProductionForm::Ces), Error);
  CHECK_NOTHROW(validate(p, ProductionForm::CobbDouglas));
  p = ModelParams{};
  p.lambda_x = 0.0;
  CHECK_THROWS_AS(validate(p), Error);
}
