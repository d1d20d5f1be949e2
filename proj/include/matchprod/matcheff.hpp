#pragma once

// Match efficiency: (ln y - ln x)_t = (1 - rho_x) b0 + rho_x (ln y - ln x)_{t-1} + u_t
// estimated by instrumental variables with the lagged gap as instrument.

#include <cstdint>
#include <vector>

namespace matchprod {

struct QualityRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double ln_y = 0.0;
  double ln_x = 0.0;
};

struct OmegaXRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double omega_x = 0.0;
};

struct MatchEffEstimate {
  std::int32_t sector = 0;
  double b0_hat = 0.0;
  double rho_x_hat = 0.0;
  double b1_hat = 0.0;            // slope of ln y on ln x within the sector
  bool rho_outside_unit = false;  // |rho_x_hat| >= 1
  bool constant_gap = false;      // lagged gap without variation; rho_x set to 0
  std::size_t n_pairs = 0;
  std::vector<OmegaXRow> omega_x;  // gap - b0_hat for every row of the sector
};

// One sector's rows. Throws InsufficientPanel without at least two pairs of
// consecutive years, DivisionDegenerate when rho_x_hat equals 1.
MatchEffEstimate estimate_match_efficiency(const std::vector<QualityRow>& rows);
// Per sector, ascending sector id.
std::vector<MatchEffEstimate> estimate_match_efficiency_by_sector(const std::vector<QualityRow>& rows);

struct SlopeCheck {
  std::vector<std::pair<std::int32_t, double>> by_sector;
  double pooled = 0.0;
};

// OLS slope of ln y on ln x (with intercept), per sector and pooled. Throws
// TooFewObservations when a slope is undefined.
SlopeCheck general_slope_check(const std::vector<QualityRow>& rows);

}  // namespace matchprod
