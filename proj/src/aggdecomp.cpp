#include "matchprod/aggdecomp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "matchprod/error.hpp"
#include "matchprod/linalg.hpp"

namespace matchprod {

namespace {

constexpr double kShareTolerance = 1e-8;
constexpr std::size_t kMinFirms = 10;

using Key = std::pair<std::int32_t, std::int32_t>;

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorKind::InvalidParam, "input columns differ in length");
}

std::map<int, std::vector<std::size_t>> rows_by_year(std::span<const int> years) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < years.size(); ++i) out[years[i]].push_back(i);
  return out;
}

void check_shares(int year, const std::vector<std::size_t>& rows, std::span<const double> shares) {
  double total = 0.0;
  for (std::size_t i : rows) total += shares[i];
  if (std::abs(total - 1.0) > kShareTolerance) {
    throw Error(ErrorKind::SharesNotNormalized,
                "shares in " + std::to_string(year) + " sum to " + std::to_string(total));
  }
}

DecompositionRow op_year(int year, const std::vector<std::size_t>& rows, std::span<const double> values,
                         std::span<const double> shares) {
  DecompositionRow d;
  d.year = year;
  d.n = rows.size();
  const double n = static_cast<double>(rows.size());
  double zbar = 0.0;
  for (std::size_t i : rows) {
    zbar += values[i];
    d.aggregate += shares[i] * values[i];
  }
  zbar /= n;
  const double sbar = 1.0 / n;
  for (std::size_t i : rows) d.covariance += (shares[i] - sbar) * (values[i] - zbar);
  d.mean = zbar;
  return d;
}

}  // namespace

std::string_view to_string(QualityVariant v) {
  switch (v) {
    case QualityVariant::Top:
      return "top";
    case QualityVariant::Nontop:
      return "nontop";
    case QualityVariant::CobbDouglas:
      return "cd";
  }
  return "unknown";
}

std::vector<MeasuredRow> measured_productivity(const std::vector<TfpRow>& tfp,
                                               const std::vector<QualityRow>& quality,
                                               const std::map<std::int32_t, double>& theta_by_sector,
                                               QualityVariant variant,
                                               const std::vector<OmegaXRow>& omega_x) {
  if (variant == QualityVariant::CobbDouglas) {
    throw Error(ErrorKind::InvalidParam, "use cd_measured_productivity for the Cobb-Douglas variant");
  }
  std::map<Key, const QualityRow*> q;
  for (const QualityRow& r : quality) q[{r.firm_id, r.year}] = &r;
  std::map<Key, double> ox;
  for (const OmegaXRow& r : omega_x) ox[{r.firm_id, r.year}] = r.omega_x;

  std::vector<MeasuredRow> out;
  out.reserve(tfp.size());
  for (const TfpRow& t : tfp) {
    auto qi = q.find({t.firm_id, t.year});
    if (qi == q.end()) {
      throw Error(ErrorKind::KeyMismatch, "no quality for firm " + std::to_string(t.firm_id) + " in " +
                                              std::to_string(t.year));
    }
    auto th = theta_by_sector.find(t.sector);
    if (th == theta_by_sector.end()) {
      throw Error(ErrorKind::KeyMismatch, "no theta for sector " + std::to_string(t.sector));
    }
    MeasuredRow m;
    m.firm_id = t.firm_id;
    m.sector = t.sector;
    m.year = t.year;
    m.omega = t.omega_hat;
    m.variant = variant;
    if (variant == QualityVariant::Top) {
      m.quality = th->second * qi->second->ln_y;
    } else {
      auto oi = ox.find({t.firm_id, t.year});
      if (oi == ox.end()) {
        throw Error(ErrorKind::KeyMismatch, "no match efficiency for firm " + std::to_string(t.firm_id));
      }
      m.quality = th->second * oi->second + th->second * qi->second->ln_x;
    }
    m.z = m.omega + m.quality;
    out.push_back(m);
  }
  return out;
}

std::vector<CdMeasuredRow> cd_measured_productivity(
    const std::vector<CdInputRow>& rows,
    const std::map<std::int32_t, std::pair<double, double>>& betas_by_sector) {
  std::vector<CdMeasuredRow> out;
  out.reserve(rows.size());
  for (const CdInputRow& r : rows) {
    auto it = betas_by_sector.find(r.sector);
    if (it == betas_by_sector.end()) {
      throw Error(ErrorKind::KeyMismatch, "no Cobb-Douglas betas for sector " + std::to_string(r.sector));
    }
    CdMeasuredRow m;
    m.firm_id = r.firm_id;
    m.sector = r.sector;
    m.year = r.year;
    m.eta = r.eta;
    m.x_part = it->second.first * r.ln_x;
    m.y_part = it->second.second * r.ln_y;
    m.z = m.eta + m.x_part + m.y_part;
    out.push_back(m);
  }
  return out;
}

std::vector<double> normalize_shares(std::span<const int> years, std::span<const double> shares) {
  check_lengths(years.size(), shares.size());
  std::vector<double> out(shares.begin(), shares.end());
  for (const auto& [year, rows] : rows_by_year(years)) {
    double total = 0.0;
    for (std::size_t i : rows) total += shares[i];
    if (!(total > 0.0)) throw Error(ErrorKind::SharesNotNormalized, "shares in a year sum to zero");
    for (std::size_t i : rows) out[i] = shares[i] / total;
  }
  return out;
}

std::vector<YearValue> aggregate(std::span<const int> years, std::span<const double> values,
                                 std::span<const double> shares) {
  check_lengths(years.size(), values.size());
  check_lengths(years.size(), shares.size());
  std::vector<YearValue> out;
  for (const auto& [year, rows] : rows_by_year(years)) {
    check_shares(year, rows, shares);
    double z = 0.0;
    for (std::size_t i : rows) z += shares[i] * values[i];
    out.push_back({year, z});
  }
  return out;
}

std::vector<DecompositionRow> olley_pakes(std::span<const int> years, std::span<const double> values,
                                          std::span<const double> shares) {
  check_lengths(years.size(), values.size());
  check_lengths(years.size(), shares.size());
  std::vector<DecompositionRow> out;
  for (const auto& [year, rows] : rows_by_year(years)) {
    check_shares(year, rows, shares);
    out.push_back(op_year(year, rows, values, shares));
  }
  return out;
}

std::vector<FourTermRow> four_term(std::span<const int> years, std::span<const double> omega,
                                   std::span<const double> quality, std::span<const double> shares) {
  check_lengths(years.size(), omega.size());
  check_lengths(years.size(), quality.size());
  check_lengths(years.size(), shares.size());
  std::vector<FourTermRow> out;
  for (const auto& [year, rows] : rows_by_year(years)) {
    check_shares(year, rows, shares);
    const DecompositionRow a = op_year(year, rows, omega, shares);
    const DecompositionRow b = op_year(year, rows, quality, shares);
    out.push_back({year, a.aggregate + b.aggregate, a.mean, a.covariance, b.mean, b.covariance});
  }
  return out;
}

std::vector<GrowthRow> growth_rates(const std::vector<YearValue>& series,
                                    const std::vector<std::pair<int, int>>& windows) {
  std::map<int, double> by_year;
  for (const YearValue& v : series) by_year[v.year] = v.value;
  std::vector<GrowthRow> out;
  for (const auto& [start, end] : windows) {
    auto a = by_year.find(start);
    auto b = by_year.find(end);
    if (end <= start || a == by_year.end() || b == by_year.end()) {
      throw Error(ErrorKind::WindowOutOfRange,
                  "window " + std::to_string(start) + "-" + std::to_string(end) + " not covered");
    }
    out.push_back({start, end, (b->second - a->second) / static_cast<double>(end - start) * 100.0});
  }
  return out;
}

std::vector<DispersionRow> dispersion_stats(std::span<const int> years, std::span<const double> omega,
                                            std::span<const double> quality) {
  check_lengths(years.size(), omega.size());
  check_lengths(years.size(), quality.size());
  std::vector<DispersionRow> out;
  for (const auto& [year, rows] : rows_by_year(years)) {
    if (rows.size() < kMinFirms) {
      throw Error(ErrorKind::TooFewFirms, std::to_string(rows.size()) + " firms in " + std::to_string(year));
    }
    std::vector<double> z, om, q;
    for (std::size_t i : rows) {
      om.push_back(omega[i]);
      q.push_back(quality[i]);
      z.push_back(omega[i] + quality[i]);
    }
    DispersionRow d;
    d.year = year;
    d.n = rows.size();
    d.var_z = variance(z);
    d.var_omega = variance(om);
    d.var_quality = variance(q);
    d.cov_omega_quality = covariance(om, q);
    d.iqr = quantile(z, 0.75) - quantile(z, 0.25);
    d.p90_p10 = quantile(z, 0.90) - quantile(z, 0.10);
    d.closure = d.var_z - (d.var_omega + d.var_quality + 2.0 * d.cov_omega_quality);
    out.push_back(d);
  }
  return out;
}

std::vector<YearValue> normalize_to_year(const std::vector<YearValue>& series, int base_year) {
  auto it = std::find_if(series.begin(), series.end(), [&](const YearValue& v) { return v.year == base_year; });
  if (it == series.end()) throw Error(ErrorKind::WindowOutOfRange, "base year not in series");
  const double base = it->value;
  std::vector<YearValue> out = series;
  for (YearValue& v : out) v.value -= base;
  return out;
}

}  // namespace matchprod
