#include "matchprod/matcheff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "matchprod/error.hpp"
#include "matchprod/linalg.hpp"

namespace matchprod {

namespace {

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) throw Error(ErrorKind::TooFewObservations, "slope needs at least two observations");
  const double vx = variance(x);
  if (!(vx > 0.0)) throw Error(ErrorKind::TooFewObservations, "regressor has no variation");
  return covariance(x, y) / vx;
}

}  // namespace

MatchEffEstimate estimate_match_efficiency(const std::vector<QualityRow>& rows) {
  if (rows.empty()) throw Error(ErrorKind::InsufficientPanel, "no rows");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a].firm_id != rows[b].firm_id) return rows[a].firm_id < rows[b].firm_id;
    return rows[a].year < rows[b].year;
  });
  std::vector<double> gap_t, gap_l;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const QualityRow& prev = rows[order[i - 1]];
    const QualityRow& cur = rows[order[i]];
    if (prev.firm_id == cur.firm_id && cur.year == prev.year + 1) {
      gap_t.push_back(cur.ln_y - cur.ln_x);
      gap_l.push_back(prev.ln_y - prev.ln_x);
    }
  }
  if (gap_t.size() < 2) throw Error(ErrorKind::InsufficientPanel, "fewer than two consecutive-year pairs");

  MatchEffEstimate est;
  est.sector = rows.front().sector;
  est.n_pairs = gap_t.size();
  // Exactly identified IV with instruments (1, lagged gap) on regressors
  // (1, lagged gap) reduces to least squares.
  const double vl = variance(gap_l);
  const double scale = 1.0 + std::abs(mean(gap_l));
  if (!(vl > 1e-24 * scale * scale)) {
    est.constant_gap = true;
    est.rho_x_hat = 0.0;
    est.b0_hat = mean(gap_t);
  } else {
    est.rho_x_hat = covariance(gap_l, gap_t) / vl;
    const double intercept = mean(gap_t) - est.rho_x_hat * mean(gap_l);
    if (est.rho_x_hat == 1.0) throw Error(ErrorKind::DivisionDegenerate, "unit root in the gap");
    est.b0_hat = intercept / (1.0 - est.rho_x_hat);
  }
  est.rho_outside_unit = std::abs(est.rho_x_hat) >= 1.0;

  std::vector<double> lx, ly;
  for (const QualityRow& r : rows) {
    est.omega_x.push_back({r.firm_id, r.sector, r.year, (r.ln_y - r.ln_x) - est.b0_hat});
    lx.push_back(r.ln_x);
    ly.push_back(r.ln_y);
  }
  est.b1_hat = variance(lx) > 0.0 ? covariance(lx, ly) / variance(lx)
                                  : std::numeric_limits<double>::quiet_NaN();
  return est;
}

std::vector<MatchEffEstimate> estimate_match_efficiency_by_sector(const std::vector<QualityRow>& rows) {
  std::map<std::int32_t, std::vector<QualityRow>> parts;
  for (const QualityRow& r : rows) parts[r.sector].push_back(r);
  std::vector<MatchEffEstimate> out;
  for (const auto& [sector, part] : parts) out.push_back(estimate_match_efficiency(part));
  return out;
}

SlopeCheck general_slope_check(const std::vector<QualityRow>& rows) {
  std::map<std::int32_t, std::pair<std::vector<double>, std::vector<double>>> parts;
  std::vector<double> lx, ly;
  for (const QualityRow& r : rows) {
    parts[r.sector].first.push_back(r.ln_x);
    parts[r.sector].second.push_back(r.ln_y);
    lx.push_back(r.ln_x);
    ly.push_back(r.ln_y);
  }
  SlopeCheck out;
  for (const auto& [sector, xy] : parts) out.by_sector.emplace_back(sector, slope(xy.first, xy.second));
  out.pooled = slope(lx, ly);
  return out;
}

}  // namespace matchprod
