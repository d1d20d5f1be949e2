#include "matchprod/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "matchprod/error.hpp"

namespace matchprod {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidParam, what);
}

bool finite_all(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

// Zero test for denominators built from O(1) parameter combinations.
bool near_zero(double v, double scale) { return std::abs(v) <= 1e-12 * std::max(1.0, scale); }

double density_constant(const ModelParams& p) {
  return p.lambda_x * std::pow(p.x_min, p.lambda_x) / (p.lambda_y * std::pow(p.y_min, p.lambda_y));
}

void check_type(double x, double x_min, const char* what) {
  if (!(x >= x_min)) {
    throw Error(ErrorKind::DomainError, std::string(what) + " below the support minimum");
  }
}

}  // namespace

void validate(const ModelParams& p, ProductionForm form) {
  require(finite_all({p.alpha_x, p.alpha_y, p.alpha_l, p.alpha_k, p.theta, p.sigma, p.lambda_x,
                      p.lambda_y, p.x_min, p.y_min, p.rho, p.rho_x, p.sigma_xi, p.sigma_u_x,
                      p.sigma_eps, p.beta_0, p.beta_x_cd, p.beta_y_cd}),
          "non-finite parameter");
  require(p.alpha_l > 0.0 && p.alpha_l < 1.0, "alpha_l must lie in (0,1)");
  require(p.alpha_k >= 0.0 && p.alpha_k < 1.0, "alpha_k must lie in [0,1)");
  require(p.lambda_x > 0.0 && p.lambda_y > 0.0, "Pareto exponents must be positive");
  require(p.x_min > 0.0 && p.y_min > 0.0, "Pareto minima must be positive");
  require(p.rho > -1.0 && p.rho < 1.0, "rho must lie in (-1,1)");
  require(p.rho_x > -1.0 && p.rho_x < 1.0, "rho_x must lie in (-1,1)");
  require(p.sigma_xi >= 0.0 && p.sigma_u_x >= 0.0 && p.sigma_eps >= 0.0,
          "noise scales must be non-negative");
  if (form == ProductionForm::Ces) {
    require(p.alpha_x > 0.0 && p.alpha_y > 0.0, "CES weights must be positive");
    require(p.theta != 0.0, "theta must be nonzero");
    require(p.sigma > 0.0, "sigma must be positive");
    require(p.sigma != 1.0, "CES mode requires sigma != 1");
  }
}

PamStatus pam_check(const ModelParams& p) {
  PamStatus s;
  s.necessary_ok = (p.theta > 0.0 && p.sigma >= 1.0) || (p.theta < 0.0 && p.sigma <= 1.0);
  const double gap = p.lambda_x - p.lambda_y;
  const double a = p.alpha_l * gap;
  const double b = -(1.0 - p.alpha_l) * gap;
  s.sufficient_ok = p.theta > std::max(a, b) || p.theta < std::min(a, b);
  return s;
}

EquilibriumConstants compute_constants(const ModelParams& p) {
  validate(p, ProductionForm::Ces);
  const double t_over_l = p.theta / p.alpha_l;
  const double t_over_1ml = p.theta / (1.0 - p.alpha_l);
  const double num = t_over_l + p.lambda_y - p.lambda_x;
  const double den = t_over_1ml - p.lambda_y + p.lambda_x;
  if (near_zero(den, std::max({std::abs(t_over_1ml), p.lambda_x, p.lambda_y}))) {
    throw Error(ErrorKind::DivisionDegenerate,
                "theta/(1-alpha_l) - lambda_y + lambda_x is zero");
  }
  const double psi = p.alpha_x * num / (p.alpha_y * den);
  if (!(psi > 0.0)) {
    throw Error(ErrorKind::PamViolation,
                "matching constant Psi = " + std::to_string(psi) + " is not positive");
  }
  EquilibriumConstants c;
  c.psi = psi;
  c.b0 = std::log(psi) / (1.0 - p.sigma);
  c.a_base = std::exp(c.b0);
  c.b_exponent = 1.0;
  c.c_density = density_constant(p);
  c.lambda_wage = p.alpha_l * std::pow(p.alpha_x + psi * p.alpha_y, p.theta / (1.0 - p.sigma)) *
                  std::pow(psi, p.lambda_y * (p.alpha_l - 1.0) / (1.0 - p.sigma)) *
                  std::pow(c.c_density, p.alpha_l - 1.0);
  c.x_min = p.x_min;
  return c;
}

double slope_factor(double omega_x, const EquilibriumConstants& c) {
  return std::exp(c.b0 + omega_x);
}

double match_T(double x, double omega_x, const EquilibriumConstants& c) {
  check_type(x, c.x_min, "non-top type");
  return slope_factor(omega_x, c) * x;
}

double inverse_match(double y, double omega_x, const EquilibriumConstants& c) {
  const double a = slope_factor(omega_x, c);
  if (!(y >= a * c.x_min)) {
    throw Error(ErrorKind::DomainError, "top type below T(x_min)");
  }
  return std::max(y / a, c.x_min);
}

double labor_demand(double x, double omega_x, const EquilibriumConstants& c,
                    const ModelParams& p) {
  check_type(x, c.x_min, "non-top type");
  const double log_l = p.lambda_y * (c.b0 + omega_x) + std::log(c.c_density) +
                       (p.lambda_y - p.lambda_x) * std::log(x);
  return std::exp(log_l);
}

double wage_type_elasticity(const ModelParams& p) {
  return p.theta + (1.0 - p.alpha_l) * (p.lambda_x - p.lambda_y);
}

double wage(double x, double omega, double omega_x, const EquilibriumConstants& c,
            const ModelParams& p) {
  check_type(x, c.x_min, "non-top type");
  const double log_w = std::log(c.lambda_wage) + omega +
                       omega_x * (p.theta - p.lambda_y * (1.0 - p.alpha_l)) +
                       wage_type_elasticity(p) * std::log(x);
  return std::exp(log_w);
}

double density_ratio(double x, double y, const EquilibriumConstants& c, const ModelParams& p) {
  return c.c_density * std::pow(y, p.lambda_y + 1.0) / std::pow(x, p.lambda_x + 1.0);
}

double output_ces(double omega, double omega_x, double x, double y, double l, double k,
                  const ModelParams& p) {
  if (!(x > 0.0 && y > 0.0 && l > 0.0 && k > 0.0)) {
    throw Error(ErrorKind::DomainError, "production inputs must be positive");
  }
  const double one_m_s = 1.0 - p.sigma;
  const double q = p.alpha_x * std::exp(one_m_s * (omega_x + std::log(x))) +
                   p.alpha_y * std::exp(one_m_s * std::log(y));
  double log_f = omega + p.theta / one_m_s * std::log(q) + p.alpha_l * std::log(l);
  if (p.alpha_k != 0.0) log_f += p.alpha_k * std::log(k);
  return std::exp(log_f);
}

double output_matched(double omega, double omega_x, double x, double l, double k,
                      const ModelParams& p, const EquilibriumConstants& c) {
  if (!(x > 0.0 && l > 0.0 && k > 0.0)) {
    throw Error(ErrorKind::DomainError, "production inputs must be positive");
  }
  double log_f = p.theta / (1.0 - p.sigma) * std::log(p.alpha_x + p.alpha_y * c.psi) + omega +
                 p.theta * (omega_x + std::log(x)) + p.alpha_l * std::log(l);
  if (p.alpha_k != 0.0) log_f += p.alpha_k * std::log(k);
  return std::exp(log_f);
}

bool cd_pam_condition(const ModelParams& p) {
  const double lo = p.beta_x_cd / p.lambda_x;
  const double hi = 1.0 - p.beta_y_cd / p.lambda_y;
  return (lo < p.alpha_l && p.alpha_l < hi) || (hi < p.alpha_l && p.alpha_l < lo);
}

CdConstants cd_constants(const ModelParams& p, double eta) {
  validate(p, ProductionForm::CobbDouglas);
  const double d = (1.0 - p.alpha_l) * p.lambda_y - p.beta_y_cd;
  const double num = (1.0 - p.alpha_l) * (p.alpha_l * p.lambda_x - p.beta_x_cd);
  const double den = p.alpha_l * d;
  if (near_zero(den, p.lambda_y)) {
    throw Error(ErrorKind::DivisionDegenerate, "(1-alpha_l) lambda_y - beta_y is zero");
  }
  const double b = num / den;
  if (!(b > 0.0)) {
    throw Error(ErrorKind::PamViolation,
                "Cobb-Douglas matching exponent B = " + std::to_string(b) + " is not positive");
  }
  CdConstants cd;
  cd.b = b;
  cd.c_density = density_constant(p);
  const double log_a =
      ((1.0 - p.alpha_l) * std::log(b / cd.c_density) + std::log(p.alpha_l) + eta) / d;
  cd.a = std::exp(log_a);
  return cd;
}

double cd_match_T(double x, const CdConstants& cd) {
  if (!(x > 0.0)) throw Error(ErrorKind::DomainError, "non-top type must be positive");
  return cd.a * std::pow(x, cd.b);
}

double cd_labor_demand(double x, double y, double eta, const ModelParams& p) {
  if (!(x > 0.0 && y > 0.0)) throw Error(ErrorKind::DomainError, "types must be positive");
  const double bx = p.beta_x_cd;
  const double log_inner =
      std::log(p.alpha_l) + eta + (bx - bx / p.alpha_l) * std::log(x) + p.beta_y_cd * std::log(y);
  return std::exp(log_inner / (1.0 - p.alpha_l));
}

double output_cd(double eta, double x, double y, double l, double k, const ModelParams& p) {
  if (!(x > 0.0 && y > 0.0 && l > 0.0 && k > 0.0)) {
    throw Error(ErrorKind::DomainError, "production inputs must be positive");
  }
  double log_f = eta + p.beta_x_cd * std::log(x) + p.beta_y_cd * std::log(y) +
                 p.alpha_l * std::log(l);
  if (p.alpha_k != 0.0) log_f += p.alpha_k * std::log(k);
  return std::exp(log_f);
}

std::vector<double> ode_residual(const MatchingCandidate& candidate, std::span<const double> grid,
                                 const ModelParams& p, ProductionForm form, double omega_x) {
  if (grid.size() < 5) throw Error(ErrorKind::GridTooSmall, "ODE oracle needs at least 5 points");
  using ld = long double;
  const ld al = p.alpha_l;
  const ld th = p.theta;
  const ld lx = p.lambda_x;
  const ld ly = p.lambda_y;

  std::vector<double> out;
  out.reserve(grid.size());
  for (double xd : grid) {
    const ld x = xd;
    // Round the step so x+h and x-h are exactly representable offsets.
    volatile ld xph = x + x * 1e-5L;
    const ld h = xph - x;
    const ld t0 = candidate(x);
    const ld tp = candidate(x + h);
    const ld tm = candidate(x - h);
    const ld d1 = (tp - tm) / (2 * h);
    const ld d2 = (tp - 2 * t0 + tm) / (h * h);
    const ld s = x * d1 / t0;
    const ld q = x * d2 / d1;
    ld r = 0;
    if (form == ProductionForm::Ces) {
      const ld sg = p.sigma;
      const ld ratio = std::pow(t0 / x, 1 - sg) * std::exp(-static_cast<ld>(omega_x) * (1 - sg));
      const ld bracket = 1 + static_cast<ld>(p.alpha_y) / static_cast<ld>(p.alpha_x) * ratio;
      r = th / al + th / (1 - al) * s - bracket * ((th / (1 - al) - ly - 1) * s + lx + 1 + q);
    } else {
      const ld bx = p.beta_x_cd;
      const ld by = p.beta_y_cd;
      r = (1 - al) * (al * (lx + 1) - bx) + (al * by - (1 - al) * al * (ly + 1)) * s +
          (1 - al) * al * q;
    }
    out.push_back(static_cast<double>(r));
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) {
    throw Error(ErrorKind::InvalidParam, "log_grid needs n >= 2 and 0 < lo < hi");
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + step * i);
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace matchprod
