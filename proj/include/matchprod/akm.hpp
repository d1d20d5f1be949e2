#pragma once

// Two-way fixed-effects earnings model on employer-employee matches:
//   ln w = alpha_i + X_it beta + psi_j + year-bin effect + e
// plus sample screens, the connected set, worker quality and firm-level
// top/non-top qualities.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "matchprod/panel.hpp"

namespace matchprod {

struct ScreenConfig {
  int min_age = 20;
  int max_age = 64;
  double earnings_floor = 0.0;
  double second_job_ratio = 2.0 / 3.0;
  bool drop_owners = true;
};

struct ScreenReport {
  std::size_t input = 0;
  std::size_t dropped_age = 0;
  std::size_t dropped_owner = 0;
  std::size_t dropped_floor = 0;
  std::size_t dropped_extra_jobs = 0;  // beyond the two best-paid per worker-year
  std::size_t dropped_second_job = 0;  // second job below the ratio of the first
  std::size_t output = 0;
};

struct ScreenResult {
  MatchTable matches;
  ScreenReport report;
};

// Row order of the survivors is preserved.
ScreenResult apply_sample_screens(const MatchTable& matches, const ScreenConfig& cfg = {});

struct ComponentStats {
  std::size_t n_components = 0;
  std::vector<std::size_t> match_counts;  // per component, descending
  std::size_t total_matches = 0;
  std::size_t kept_matches = 0;
  std::size_t kept_workers = 0;
  std::size_t kept_firms = 0;
  double coverage = 0.0;  // kept / total matches
};

struct ConnectedSet {
  MatchTable matches;
  ComponentStats stats;
};

// Largest component (by matches) of the bipartite worker-firm graph. Ties go
// to the component holding the smallest firm id.
ConnectedSet largest_connected_set(const MatchTable& matches);

struct AkmSpec {
  double tolerance = 1e-10;   // relative normal-equation residual
  int max_iterations = 20000;
  bool require_connected = false;
  int first_year = 0;         // bin origin; 0 means the earliest year in the data
};

struct AkmEstimate {
  std::vector<std::int64_t> worker_ids;  // ascending
  std::vector<double> alpha;             // recentered to mean zero
  std::vector<std::int32_t> firm_ids;    // ascending
  std::vector<double> psi;               // smallest firm id per component pinned to 0
  std::vector<int> component;            // per firm
  std::array<double, kAgeSexTerms> beta{};
  std::vector<double> year_effects;      // per two-year bin, bin 0 = 0
  int first_year = 0;
  double intercept = 0.0;
  std::vector<double> residuals;         // input row order
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  int n_components = 0;
  int iterations = 0;
  double relative_residual = 0.0;

  std::unordered_map<std::int64_t, std::size_t> worker_index;
  std::unordered_map<std::int32_t, std::size_t> firm_index;

  double alpha_of(std::int64_t worker_id) const;
  double psi_of(std::int32_t firm_id) const;
  double year_effect(int year) const;
};

// Preconditioned conjugate gradients on the normal equations. Throws
// NotConnected when `require_connected` is set and the graph is split,
// SolverNoConvergence when the iteration cap is hit, TooFewObservations on
// empty input.
AkmEstimate estimate_akm(const MatchTable& matches, const AkmSpec& spec = {});

// h_it = alpha_i + X_it beta, aligned with `matches`. Throws UnknownWorker.
std::vector<double> worker_quality(const AkmEstimate& est, const MatchTable& matches);

// Per firm-year: best-paid match flagged, plus the runner-up when its earnings
// exceed 0.995 of the best. Ties ordered by worker id.
std::vector<std::uint8_t> identify_top_workers(const MatchTable& matches, double tie_ratio = 0.995);

struct FirmQuality {
  std::int32_t firm_id = 0;
  std::int32_t year = 0;
  double ln_y = 0.0;
  double ln_x = 0.0;
  int n_top = 0;
  int n_nontop = 0;
};

struct FirmQualityResult {
  std::vector<FirmQuality> rows;  // sorted by (firm_id, year)
  std::size_t dropped_no_nontop = 0;
};

FirmQualityResult firm_quality(const MatchTable& matches, const std::vector<double>& h,
                               const std::vector<std::uint8_t>& top_flags);

struct VarianceRow {
  std::string group;  // "all" or a firm-size bin label
  std::size_t n = 0;
  double var_lnw = 0.0;
  double var_worker = 0.0;
  double var_firm = 0.0;
  double var_xb = 0.0;
  double var_resid = 0.0;
  double cov_worker_firm = 0.0;
  double cov_worker_xb = 0.0;
  double cov_firm_xb = 0.0;
  double cov_worker_resid = 0.0;
  double cov_firm_resid = 0.0;
  double cov_xb_resid = 0.0;
  double worker_share = 0.0;   // var_worker / var_lnw
  double closure_error = 0.0;  // var_lnw minus the sum of all parts
};

inline const std::vector<int> kDefaultSizeBins{1, 10, 20, 100, 500};

// `matches` must be the estimation sample in the row order used by
// estimate_akm. Firm size is the number of matches of the firm in the year;
// `size_bins` are ascending lower bounds.
std::vector<VarianceRow> variance_decomposition(const AkmEstimate& est, const MatchTable& matches,
                                                const std::vector<int>& size_bins = kDefaultSizeBins);

}  // namespace matchprod
