#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "matchprod/model.hpp"
#include "matchprod/panel.hpp"
#include "matchprod/rng.hpp"

namespace matchprod {

struct SimConfig {
  int n_firms = 200;  // per sector
  int n_sectors = 1;
  int years = 13;
  int first_year = 2003;
  ProductionForm form = ProductionForm::Ces;
  // One entry per sector; a single entry is reused for every sector.
  std::vector<ModelParams> sector_params{ModelParams{}};

  double mobility_rate = 0.3;
  int mobility_neighborhood = 5;  // movers go to firms within this many type ranks
  double workers_per_firm_scale = 15.0;
  double type_truncation_quantile = 1.0 - 1e-6;

  // Sector log-price AR(1) processes.
  double price_g_rho = 0.8;
  double price_g_sd = 0.02;
  double price_m_rho = 0.8;
  double price_m_sd = 0.03;

  // ln m = c0 + c1 w + c5 w^3 + c2 ln l + c3 ln k + c4 ln(p_g/p_m)
  std::array<double, 5> intermediate_c{0.5, 1.0, 0.6, 0.3, 0.5};
  double intermediate_cubic = 0.0;

  // ln k_t = (1-rho_k) kbar_j + rho_k ln k_{t-1} + loading * omega_{t-1} + sd * e
  double capital_log_mean = 12.0;
  double capital_firm_sd = 0.8;
  double capital_rho = 0.8;
  double capital_loading = 0.3;
  double capital_sd = 0.1;

  // Deterministic trends per year. The quality trends (omega_x and x) are
  // scaled per firm by (1 + loading * z_j) where z_j is the firm's
  // standardized persistent employment deviation.
  double omega_drift = 0.0;
  double omega_x_drift = 0.0;
  double x_drift = 0.0;
  double drift_size_loading = 0.0;
  // The sd of the productivity innovation in year t is sigma_xi (1 + g t).
  double omega_sd_growth = 0.0;

  // Dispersion of omega in the first year; stationary when unset.
  std::optional<double> omega_init_sd;
  double labor_noise_sd = 0.0;      // per-year log deviation of l from labor demand
  double labor_firm_sd = 0.3;       // persistent firm-level log deviation of l
  // CD only: the match and labor are chosen on expected productivity
  // rho omega_{t-1}, and ln y = ln A + B ln x + d with d AR(1) (persistence
  // rho_x, this stationary sd).
  double cd_match_noise_sd = 0.1;

  // Worker panel.
  double wage_intercept = 10.0;
  std::array<double, kAgeSexTerms> age_sex_beta{0.05, -0.08, -0.02, -0.01, 0.0};
  double year_bin_step = 0.05;
  double earnings_noise_sd = 0.0;
  std::optional<double> target_r2;  // overrides earnings_noise_sd
  double nontop_dispersion = 0.05;
  double owner_fraction = 0.0;
  double male_share = 0.5;

  std::uint64_t seed = 20031015;
};

// Throws ConfigError on invalid settings and PamViolation when a sector's
// parameters do not support positive assortative matching.
void validate(const SimConfig& cfg);

const ModelParams& sector_params(const SimConfig& cfg, int sector);

// Inverse-CDF Pareto draws minimum * (1 - q u)^{-1/lambda}, where q is the
// truncation quantile (1 means untruncated).
std::vector<double> draw_pareto(double lambda, double minimum, std::size_t n, RandomStream& stream,
                                double truncation_quantile = 1.0);

FirmPanel simulate_firm_panel(const SimConfig& cfg);

struct WorkerPanelTruth {
  std::vector<double> firm_effect;  // indexed by firm_id
  std::array<double, kAgeSexTerms> age_sex_beta{};
  std::vector<double> year_bin_effect;
  double earnings_noise_sd = 0.0;
};

struct WorkerPanel {
  MatchTable matches;
  WorkerPanelTruth truth;
};

// Rows sorted by (year, firm_id, worker_id).
WorkerPanel simulate_worker_panel(const FirmPanel& firms, const SimConfig& cfg);

}  // namespace matchprod
