#pragma once

// Structural model: CES (and Cobb-Douglas) production with a top worker
// matched to a team of non-top workers, Pareto-distributed worker types, and
// the closed-form positive-assortative matching equilibrium.

#include <functional>
#include <span>
#include <vector>

namespace matchprod {

enum class ProductionForm { Ces, CobbDouglas };

// Defaults are a construction-sector calibration that satisfies the PAM
// sufficient condition (see README for the calibration notes).
struct ModelParams {
  double alpha_x = 0.5;    // CES weight on the non-top composite
  double alpha_y = 0.5;    // CES weight on the top worker
  double alpha_l = 0.777;  // elasticity w.r.t. number of non-top workers
  double alpha_k = 0.079;  // capital elasticity
  double theta = 0.417;    // returns to the worker-quality composite
  double sigma = 4.5;      // inverse elasticity of substitution
  double lambda_x = 2.06;  // Pareto exponent, non-top workers
  double lambda_y = 1.80;  // Pareto exponent, top workers
  double x_min = 1.0;
  double y_min = 1.8;
  double rho = 0.702;      // persistence of Hicks-neutral productivity
  double rho_x = 0.7;      // persistence of match efficiency
  double sigma_xi = 0.1;
  double sigma_u_x = 0.1;
  double sigma_eps = 0.1;
  double beta_0 = 10.987;
  double beta_x_cd = 0.3;
  double beta_y_cd = 0.3;
};

// Throws Error{InvalidParam} on any range violation.
void validate(const ModelParams& p, ProductionForm form = ProductionForm::Ces);

struct EquilibriumConstants {
  double psi = 1.0;          // matching constant
  double a_base = 1.0;       // Psi^{1/(1-sigma)}: matching slope at omega_x = 0
  double b_exponent = 1.0;   // matching exponent (1 under CES)
  double c_density = 1.0;    // lambda_x x_min^lambda_x / (lambda_y y_min^lambda_y)
  double lambda_wage = 1.0;  // wage-level constant
  double b0 = 0.0;           // ln(Psi)/(1-sigma)
  double x_min = 1.0;        // lower end of the non-top type support
};

struct PamStatus {
  bool necessary_ok = false;
  bool sufficient_ok = false;
};

PamStatus pam_check(const ModelParams& p);

// CES closed form. Throws PamViolation when Psi <= 0 and DivisionDegenerate
// when the denominator theta/(1-alpha_l) - lambda_y + lambda_x vanishes.
EquilibriumConstants compute_constants(const ModelParams& p);

// Matching slope A = Psi^{1/(1-sigma)} e^{omega_x}.
double slope_factor(double omega_x, const EquilibriumConstants& c);

double match_T(double x, double omega_x, const EquilibriumConstants& c);
double inverse_match(double y, double omega_x, const EquilibriumConstants& c);
double labor_demand(double x, double omega_x, const EquilibriumConstants& c, const ModelParams& p);
double wage(double x, double omega, double omega_x, const EquilibriumConstants& c,
            const ModelParams& p);
// Exponent of x in the wage: theta + (1-alpha_l)(lambda_x - lambda_y).
double wage_type_elasticity(const ModelParams& p);
// g(x)/h(T(x)) = C T(x)^{lambda_y+1} / x^{lambda_x+1}
double density_ratio(double x, double y, const EquilibriumConstants& c, const ModelParams& p);

// Free-form CES production (capital term dropped when alpha_k == 0).
double output_ces(double omega, double omega_x, double x, double y, double l, double k,
                  const ModelParams& p);
// Production evaluated on the matching locus y = T(x).
double output_matched(double omega, double omega_x, double x, double l, double k,
                      const ModelParams& p, const EquilibriumConstants& c);

// Cobb-Douglas variant: y = A x^B with A depending on the technology level eta.
struct CdConstants {
  double a = 1.0;
  double b = 1.0;
  double c_density = 1.0;
};

CdConstants cd_constants(const ModelParams& p, double eta);
bool cd_pam_condition(const ModelParams& p);
double cd_match_T(double x, const CdConstants& cd);
// Labor demand implied by f_l = w with w(x) = x^{beta_x/alpha_l}.
double cd_labor_demand(double x, double y, double eta, const ModelParams& p);
double output_cd(double eta, double x, double y, double l, double k, const ModelParams& p);

// Pointwise residual of the second-order equilibrium ODE for a candidate
// matching function, using central differences (step x * 1e-5) evaluated in
// extended precision. Under CES the residual is the normalized form
//   theta/alpha_l + theta/(1-alpha_l) S - [1 + (alpha_y/alpha_x) e^{-omega_x(1-sigma)} (T/x)^{1-sigma}]
//     * [(theta/(1-alpha_l) - lambda_y - 1) S + lambda_x + 1 + x T''/T']
// with S = x T'/T; under Cobb-Douglas it is x times the left side of the
// rearranged first-order condition. Throws GridTooSmall below 5 points.
using MatchingCandidate = std::function<long double(long double)>;

std::vector<double> ode_residual(const MatchingCandidate& candidate, std::span<const double> grid,
                                 const ModelParams& p, ProductionForm form,
                                 double omega_x = 0.0);

// Log-spaced grid with n points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace matchprod
