#pragma once

// Two-stage proxy-variable estimation of
//   ln f = b0 + theta ln y + alpha_l ln l + alpha_k ln k + omega + eps
// with omega AR(1) and intermediates as the proxy, plus the Cobb-Douglas
// variant with both worker qualities.

#include <cstdint>
#include <string>
#include <vector>

#include "matchprod/akm.hpp"
#include "matchprod/model.hpp"
#include "matchprod/panel.hpp"

namespace matchprod {

struct PfRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double ln_f = 0.0;
  double ln_y = 0.0;
  double ln_x = 0.0;
  double ln_l = 0.0;
  double ln_k = 0.0;
  double ln_m = 0.0;
  double ln_pg = 0.0;
  double ln_pm = 0.0;
};

using PfPanel = std::vector<PfRow>;

// Worker qualities taken from the simulation truth columns.
PfPanel pf_panel_from_truth(const FirmPanel& firms);
// Inner join of firm rows with estimated qualities on (firm_id, year). Throws
// KeyMismatch when nothing matches.
PfPanel pf_panel_from_quality(const FirmPanel& firms, const std::vector<FirmQuality>& quality);

enum class GmmWeighting { Identity, TwoStep };

struct PfOptions {
  ProductionForm form = ProductionForm::Ces;
  int degree = 3;
  GmmWeighting weighting = GmmWeighting::Identity;
  bool price_instruments = false;
  // Year intercepts in the productivity law of motion, with year dummies as
  // instruments. Absorbs common productivity trends; beta_0 then carries
  // the intercept of the first pair year.
  bool year_effects = false;
  int perturbed_starts = 8;
  double start_scale = 0.1;
  double gradient_tolerance = 1e-8;
  int max_iterations = 500;
  std::uint64_t seed = 7;
};

struct Stage1Result {
  std::vector<double> phi;        // aligned with the panel rows
  std::vector<double> residuals;  // measurement-error estimates
  double r2 = 0.0;
  int n_terms = 0;                // basis columns including the intercept
  std::vector<int> dropped;       // collinear basis columns
};

// OLS of ln f on all monomials of total degree <= `degree` in the
// standardized logs of (y, l, k, m, p_g, p_m), plus ln x under Cobb-Douglas.
Stage1Result stage1(const PfPanel& panel, int degree = 3,
                    ProductionForm form = ProductionForm::Ces);

struct PfEstimate {
  std::int32_t sector = 0;
  ProductionForm form = ProductionForm::Ces;
  // CES: beta_0, theta, alpha_l, alpha_k, rho
  // CD:  beta_0, beta_x, beta_y, alpha_l, alpha_k, rho
  std::vector<std::string> names;
  std::vector<double> coef;
  std::vector<double> se;  // NaN until bootstrapped
  double objective = 0.0;
  bool converged = false;
  std::size_t n_obs = 0;    // firm-years in stage 1
  std::size_t n_pairs = 0;  // (t-1, t) pairs in stage 2
  Stage1Result stage1;

  double get(const std::string& name) const;
  double beta_0() const { return get("beta_0"); }
  double theta() const { return get("theta"); }
  double alpha_l() const { return get("alpha_l"); }
  double alpha_k() const { return get("alpha_k"); }
  double rho() const { return get("rho"); }
};

std::vector<std::string> pf_coefficient_names(ProductionForm form);

// GMM on E[e_jt(b) z_jt] = 0 with
//   e = ln f_t - X_t b - rho (phi_{t-1} - X_{t-1} b)
// and instruments (1, phi_{t-1}, ln m_{t-1}, ln y_{t-1}, ln l_{t-1}, ln k_t)
// (+ ln x_{t-1} under Cobb-Douglas, + lagged prices on request). Only pairs of
// consecutive observed years enter. Throws InsufficientPanel.
PfEstimate stage2(const PfPanel& panel, const Stage1Result& s1, const PfOptions& opt = {});

// Quadratic-form objective at a given coefficient vector (identity weighting).
double stage2_objective(const PfPanel& panel, const std::vector<double>& phi,
                        const std::vector<double>& coef, const PfOptions& opt = {});

// Both stages for one sector's rows.
PfEstimate estimate_production(const PfPanel& panel, const PfOptions& opt = {});
// Both stages for each sector present, ascending sector id.
std::vector<PfEstimate> estimate_by_sector(const PfPanel& panel, const PfOptions& opt = {});
// Stage-1 fitted values of per-sector estimates laid back onto the rows of
// the full panel (each estimate's phi follows its sector's rows in order).
std::vector<double> assemble_phi(const PfPanel& panel, const std::vector<PfEstimate>& estimates);
// Cobb-Douglas variant (both quality columns required).
PfEstimate estimate_cd(const PfPanel& panel, PfOptions opt = {});

struct BootstrapResult {
  std::vector<double> se;
  std::vector<std::vector<double>> replicates;  // successful replicates only
  int failures = 0;
};

// Firm-block bootstrap of both stages. Each replicate's stage-2 search starts
// from the full-sample estimate. Requires a single sector, B >= 2 and at
// least 80% of replicates to succeed (BootstrapFailed otherwise).
BootstrapResult bootstrap_se(const PfPanel& panel, int replications, const PfOptions& opt = {},
                             std::uint64_t seed = 1);

struct TfpRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double omega_hat = 0.0;
};

// omega = phi - b0 - theta ln y - alpha_l ln l - alpha_k ln k (Cobb-Douglas:
// with beta_x ln x + beta_y ln y). Uses the estimate of each row's sector;
// throws MissingCoefficients if a sector has none.
std::vector<TfpRow> recover_tfp(const PfPanel& panel, const std::vector<double>& phi,
                                const std::vector<PfEstimate>& estimates);

}  // namespace matchprod
