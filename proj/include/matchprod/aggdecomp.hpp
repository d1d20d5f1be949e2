#pragma once

// Measured productivity z = omega + quality, share-weighted aggregation,
// Olley-Pakes and four-term decompositions, growth rates and dispersion.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "matchprod/matcheff.hpp"
#include "matchprod/prodfn.hpp"

namespace matchprod {

enum class QualityVariant { Top, Nontop, CobbDouglas };

std::string_view to_string(QualityVariant v);

struct MeasuredRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double z = 0.0;
  double omega = 0.0;
  double quality = 0.0;
  QualityVariant variant = QualityVariant::Top;
};

// Top:    z = omega + theta ln y
// Nontop: z = omega + theta omega_x + theta ln x
// `omega_x` is only read by the Nontop variant. Every TFP row needs a quality
// (and omega_x) row with the same (firm_id, year); KeyMismatch otherwise.
std::vector<MeasuredRow> measured_productivity(const std::vector<TfpRow>& tfp,
                                               const std::vector<QualityRow>& quality,
                                               const std::map<std::int32_t, double>& theta_by_sector,
                                               QualityVariant variant,
                                               const std::vector<OmegaXRow>& omega_x = {});

struct CdInputRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double eta = 0.0;
  double ln_x = 0.0;
  double ln_y = 0.0;
};

struct CdMeasuredRow {
  std::int32_t firm_id = 0;
  std::int32_t sector = 0;
  std::int32_t year = 0;
  double z = 0.0;
  double eta = 0.0;
  double x_part = 0.0;  // beta_x ln x
  double y_part = 0.0;  // beta_y ln y
};

// z = eta + beta_x ln x + beta_y ln y with sector-specific betas; throws
// KeyMismatch if a sector has no betas.
std::vector<CdMeasuredRow> cd_measured_productivity(
    const std::vector<CdInputRow>& rows,
    const std::map<std::int32_t, std::pair<double, double>>& betas_by_sector);

struct YearValue {
  int year = 0;
  double value = 0.0;
};

// Rescales shares to sum to one within each year (used after sample screens
// remove firms).
std::vector<double> normalize_shares(std::span<const int> years, std::span<const double> shares);

// z_t = sum_j s_jt z_jt. Throws SharesNotNormalized when a year's shares miss
// one by more than 1e-8.
std::vector<YearValue> aggregate(std::span<const int> years, std::span<const double> values,
                                 std::span<const double> shares);

struct DecompositionRow {
  int year = 0;
  std::size_t n = 0;
  double aggregate = 0.0;
  double mean = 0.0;
  double covariance = 0.0;  // sum_j (s - 1/n)(z - mean), not divided by n
};

std::vector<DecompositionRow> olley_pakes(std::span<const int> years, std::span<const double> values,
                                          std::span<const double> shares);

struct FourTermRow {
  int year = 0;
  double aggregate = 0.0;
  double omega_mean = 0.0;
  double omega_cov = 0.0;
  double quality_mean = 0.0;
  double quality_cov = 0.0;
};

std::vector<FourTermRow> four_term(std::span<const int> years, std::span<const double> omega,
                                   std::span<const double> quality, std::span<const double> shares);

struct GrowthRow {
  int start = 0;
  int end = 0;
  double rate = 0.0;  // log points per year x 100
};

// ((v_end - v_start) / (end - start)) * 100 per window. Throws
// WindowOutOfRange when a window end is missing or the window is empty.
std::vector<GrowthRow> growth_rates(const std::vector<YearValue>& series,
                                    const std::vector<std::pair<int, int>>& windows);

struct DispersionRow {
  int year = 0;
  std::size_t n = 0;
  double var_z = 0.0;
  double var_omega = 0.0;
  double var_quality = 0.0;
  double cov_omega_quality = 0.0;
  double iqr = 0.0;        // of z
  double p90_p10 = 0.0;    // of z
  double closure = 0.0;    // var_z - (var_omega + var_quality + 2 cov)
};

// Per year, z = omega + quality. Throws TooFewFirms below 10 firms in a year.
std::vector<DispersionRow> dispersion_stats(std::span<const int> years, std::span<const double> omega,
                                            std::span<const double> quality);

// Subtracts each series' value in `base_year` (presentation only).
std::vector<YearValue> normalize_to_year(const std::vector<YearValue>& series, int base_year);

}  // namespace matchprod
