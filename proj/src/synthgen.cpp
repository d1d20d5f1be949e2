#include "matchprod/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>

#include "matchprod/akm.hpp"
#include "matchprod/error.hpp"

namespace matchprod {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ConfigError, what);
}

struct SectorPrices {
  std::vector<double> log_pg;
  std::vector<double> log_pm;
};

SectorPrices simulate_prices(const SimConfig& cfg, int sector) {
  RandomStream rs(derive_seed(cfg.seed, {3, static_cast<std::uint64_t>(sector)}));
  SectorPrices p;
  p.log_pg.resize(static_cast<std::size_t>(cfg.years));
  p.log_pm.resize(static_cast<std::size_t>(cfg.years));
  double g = rs.normal(0.0, cfg.price_g_sd / std::sqrt(1.0 - cfg.price_g_rho * cfg.price_g_rho));
  double m = rs.normal(0.0, cfg.price_m_sd / std::sqrt(1.0 - cfg.price_m_rho * cfg.price_m_rho));
  for (int t = 0; t < cfg.years; ++t) {
    if (t > 0) {
      g = cfg.price_g_rho * g + rs.normal(0.0, cfg.price_g_sd);
      m = cfg.price_m_rho * m + rs.normal(0.0, cfg.price_m_sd);
    }
    p.log_pg[static_cast<std::size_t>(t)] = g;
    p.log_pm[static_cast<std::size_t>(t)] = m;
  }
  return p;
}

double stationary_sd(double sd, double rho) { return sd / std::sqrt(1.0 - rho * rho); }

}  // namespace

const ModelParams& sector_params(const SimConfig& cfg, int sector) {
  if (cfg.sector_params.empty()) throw Error(ErrorKind::ConfigError, "no sector parameters");
  if (cfg.sector_params.size() == 1) return cfg.sector_params.front();
  return cfg.sector_params.at(static_cast<std::size_t>(sector));
}

void validate(const SimConfig& cfg) {
  require(cfg.n_firms >= 1, "n_firms must be positive");
  require(cfg.n_sectors >= 1, "n_sectors must be positive");
  require(cfg.years >= 3, "years must be at least 3");
  require(cfg.sector_params.size() == 1 ||
              cfg.sector_params.size() == static_cast<std::size_t>(cfg.n_sectors),
          "sector_params must have one entry or one per sector");
  require(cfg.mobility_rate > 0.0 && cfg.mobility_rate <= 1.0, "mobility_rate must lie in (0,1]");
  require(cfg.mobility_neighborhood >= 1, "mobility_neighborhood must be positive");
  require(cfg.workers_per_firm_scale > 0.0, "workers_per_firm_scale must be positive");
  require(cfg.type_truncation_quantile > 0.0 && cfg.type_truncation_quantile <= 1.0,
          "type_truncation_quantile must lie in (0,1]");
  require(std::abs(cfg.price_g_rho) < 1.0 && std::abs(cfg.price_m_rho) < 1.0,
          "price persistence must lie in (-1,1)");
  require(cfg.price_g_sd >= 0.0 && cfg.price_m_sd >= 0.0, "price sds must be non-negative");
  require(cfg.intermediate_c[1] > 0.0, "intermediate demand needs c1 > 0");
  require(cfg.intermediate_cubic >= 0.0, "intermediate cubic term must be non-negative");
  require(std::abs(cfg.capital_rho) < 1.0, "capital_rho must lie in (-1,1)");
  require(cfg.capital_sd >= 0.0 && cfg.capital_firm_sd >= 0.0, "capital sds must be non-negative");
  require(!cfg.omega_init_sd || *cfg.omega_init_sd >= 0.0, "omega_init_sd must be non-negative");
  require(cfg.omega_sd_growth * (cfg.years - 1) > -1.0, "omega_sd_growth makes the innovation sd non-positive");
  require(cfg.labor_noise_sd >= 0.0 && cfg.labor_firm_sd >= 0.0 && cfg.cd_match_noise_sd >= 0.0,
          "noise sds must be non-negative");
  require(cfg.earnings_noise_sd >= 0.0, "earnings_noise_sd must be non-negative");
  require(!cfg.target_r2 || (*cfg.target_r2 > 0.0 && *cfg.target_r2 <= 1.0),
          "target_r2 must lie in (0,1]");
  require(cfg.nontop_dispersion >= 0.0, "nontop_dispersion must be non-negative");
  require(cfg.owner_fraction >= 0.0 && cfg.owner_fraction < 1.0, "owner_fraction must lie in [0,1)");
  require(cfg.male_share >= 0.0 && cfg.male_share <= 1.0, "male_share must lie in [0,1]");
  for (int s = 0; s < cfg.n_sectors; ++s) {
    const ModelParams& p = sector_params(cfg, s);
    try {
      validate(p, cfg.form);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, "sector " + std::to_string(s) + ": " + e.what());
    }
    if (cfg.form == ProductionForm::Ces) {
      const PamStatus pam = pam_check(p);
      if (!pam.necessary_ok || !pam.sufficient_ok) {
        throw Error(ErrorKind::PamViolation,
                    "sector " + std::to_string(s) + " parameters do not support PAM");
      }
    } else if (!cd_pam_condition(p)) {
      throw Error(ErrorKind::PamViolation,
                  "sector " + std::to_string(s) + " Cobb-Douglas parameters do not support PAM");
    }
  }
}

std::vector<double> draw_pareto(double lambda, double minimum, std::size_t n, RandomStream& stream,
                                double truncation_quantile) {
  if (!(lambda > 0.0) || !(minimum > 0.0)) {
    throw Error(ErrorKind::InvalidParam, "Pareto draws need lambda > 0 and minimum > 0");
  }
  if (!(truncation_quantile > 0.0 && truncation_quantile <= 1.0)) {
    throw Error(ErrorKind::InvalidParam, "truncation quantile must lie in (0,1]");
  }
  std::vector<double> out(n);
  for (double& v : out) {
    const double u = stream.open_uniform();
    // log1p keeps precision when q*u is tiny.
    v = minimum * std::exp(-std::log1p(-truncation_quantile * u) / lambda);
  }
  return out;
}

FirmPanel simulate_firm_panel(const SimConfig& cfg) {
  validate(cfg);
  FirmPanel panel;
  panel.reserve(static_cast<std::size_t>(cfg.n_sectors) * cfg.n_firms * cfg.years);
  const auto& c = cfg.intermediate_c;

  for (int s = 0; s < cfg.n_sectors; ++s) {
    const ModelParams& p = sector_params(cfg, s);
    const SectorPrices prices = simulate_prices(cfg, s);
    EquilibriumConstants ces{};
    CdConstants cd0{};
    double x_exponent = p.lambda_y;
    if (cfg.form == ProductionForm::Ces) {
      ces = compute_constants(p);
    } else {
      cd0 = cd_constants(p, 0.0);
      // y = A x^B is Pareto(lambda_y) across firms when x is Pareto(B lambda_y).
      x_exponent = cd0.b * p.lambda_y;
    }
    const double omega_sd0 =
        cfg.omega_init_sd ? *cfg.omega_init_sd : stationary_sd(p.sigma_xi, p.rho);
    const double omega_x_sd0 = stationary_sd(p.sigma_u_x, p.rho_x);
    const double match_innovation_sd = cfg.cd_match_noise_sd * std::sqrt(1.0 - p.rho_x * p.rho_x);

    for (int j = 0; j < cfg.n_firms; ++j) {
      const std::int32_t firm_id = s * cfg.n_firms + j;
      RandomStream firm_rs(derive_seed(cfg.seed, {1, static_cast<std::uint64_t>(s),
                                                  static_cast<std::uint64_t>(j)}));
      const double x_base =
          draw_pareto(x_exponent, p.x_min, 1, firm_rs, cfg.type_truncation_quantile).front();
      const double z_size = firm_rs.normal();
      const double kbar = cfg.capital_log_mean + cfg.capital_firm_sd * z_size;
      const double labor_scale = firm_rs.normal(0.0, cfg.labor_firm_sd);
      const double size_z = cfg.labor_firm_sd > 0.0 ? labor_scale / cfg.labor_firm_sd : 0.0;
      const double trend_scale = 1.0 + cfg.drift_size_loading * size_z;

      double omega = firm_rs.normal(0.0, omega_sd0);
      double omega_x = firm_rs.normal(0.0, omega_x_sd0);
      double match_dev = firm_rs.normal(0.0, cfg.cd_match_noise_sd);
      double log_k = kbar + cfg.capital_loading * omega +
                     firm_rs.normal(0.0, stationary_sd(cfg.capital_sd, cfg.capital_rho));
      double omega_prev_total = 0.0;

      for (int t = 0; t < cfg.years; ++t) {
        RandomStream yr(derive_seed(cfg.seed, {2, static_cast<std::uint64_t>(s),
                                               static_cast<std::uint64_t>(j),
                                               static_cast<std::uint64_t>(t)}));
        const double xi = yr.normal(0.0, p.sigma_xi * (1.0 + cfg.omega_sd_growth * t));
        const double u = yr.normal(0.0, p.sigma_u_x);
        const double k_shock = yr.normal(0.0, cfg.capital_sd);
        const double l_shock = yr.normal(0.0, cfg.labor_noise_sd);
        const double match_shock = yr.normal(0.0, match_innovation_sd);
        const double eps = yr.normal(0.0, p.sigma_eps);
        const double omega_stationary_prev = omega;
        if (t > 0) {
          omega = p.rho * omega + xi;
          omega_x = p.rho_x * omega_x + u;
          match_dev = p.rho_x * match_dev + match_shock;
          log_k = (1.0 - cfg.capital_rho) * kbar + cfg.capital_rho * log_k +
                  cfg.capital_loading * omega_prev_total + k_shock;
        }
        const double omega_total = omega + cfg.omega_drift * t;
        const double omega_x_total = omega_x + cfg.omega_x_drift * t * trend_scale;
        const double log_x = std::log(x_base) + cfg.x_drift * t * trend_scale;

        double log_y = 0.0;
        double log_l_star = 0.0;
        if (cfg.form == ProductionForm::Ces) {
          log_y = ces.b0 + omega_x_total + log_x;
          log_l_star = p.lambda_y * (ces.b0 + omega_x_total) + std::log(ces.c_density) +
                       (p.lambda_y - p.lambda_x) * log_x;
        } else {
          const double omega_expected =
              t == 0 ? omega_total : p.rho * omega_stationary_prev + cfg.omega_drift * t;
          const CdConstants cd = cd_constants(p, omega_expected);
          log_y = std::log(cd.a) + cd.b * log_x + match_dev;
          log_l_star = std::log(cd_labor_demand(std::exp(log_x), std::exp(log_y), omega_expected, p));
        }
        const double l =
            std::max(2.0, std::ceil(cfg.workers_per_firm_scale * std::exp(log_l_star + labor_scale + l_shock)));
        const double log_l = std::log(l);

        const std::size_t ti = static_cast<std::size_t>(t);
        const double log_pg = prices.log_pg[ti];
        const double log_pm = prices.log_pm[ti];
        const double log_m = c[0] + c[1] * omega_total +
                             cfg.intermediate_cubic * omega_total * omega_total * omega_total +
                             c[2] * log_l + c[3] * log_k + c[4] * (log_pg - log_pm);

        double log_f = p.beta_0 + p.alpha_l * log_l + p.alpha_k * log_k + omega_total + eps;
        if (cfg.form == ProductionForm::Ces) {
          log_f += p.theta * log_y;
        } else {
          log_f += p.beta_x_cd * log_x + p.beta_y_cd * log_y;
        }

        FirmYear fy;
        fy.firm_id = firm_id;
        fy.sector = s;
        fy.year = cfg.first_year + t;
        fy.f = std::exp(log_f);
        fy.k = std::exp(log_k);
        fy.l = l;
        fy.m = std::exp(log_m);
        fy.p_g = std::exp(log_pg);
        fy.p_m = std::exp(log_pm);
        fy.omega = omega_total;
        fy.omega_x = cfg.form == ProductionForm::Ces ? omega_x_total : match_dev;
        fy.x = std::exp(log_x);
        fy.y = std::exp(log_y);
        fy.eps = eps;
        panel.push_back(fy);
        omega_prev_total = omega_total;
      }
    }
  }

  // Shares of current-price value added within each year.
  std::map<int, double> totals;
  for (const FirmYear& fy : panel) totals[fy.year] += fy.p_g * fy.f;
  for (FirmYear& fy : panel) fy.s = fy.p_g * fy.f / totals[fy.year];
  return panel;
}

namespace {

struct Worker {
  std::int64_t id = 0;
  double alpha = 0.0;
  int age = 0;
  int male = 0;
  std::int32_t firm = -1;
};

struct Slot {
  const FirmYear* row = nullptr;
  std::vector<Worker> staff;  // persistent non-top workers
  int capacity = 0;
};

double age_sex_effect(const std::array<double, kAgeSexTerms>& beta, int age, int male) {
  const auto xs = age_sex_covariates(age, male);
  double v = 0.0;
  for (int i = 0; i < kAgeSexTerms; ++i) v += beta[static_cast<std::size_t>(i)] * xs[static_cast<std::size_t>(i)];
  return v;
}

double h_of(const Worker& w, const std::array<double, kAgeSexTerms>& beta) {
  return w.alpha + age_sex_effect(beta, w.age, w.male);
}

}  // namespace

WorkerPanel simulate_worker_panel(const FirmPanel& firms, const SimConfig& cfg) {
  validate(cfg);
  if (firms.empty()) throw Error(ErrorKind::ConfigError, "empty firm panel");
  const auto& beta = cfg.age_sex_beta;

  std::vector<int> years;
  std::int32_t max_firm = 0;
  for (const FirmYear& fy : firms) {
    if (!(std::isfinite(fy.x) && std::isfinite(fy.y) && fy.x > 0.0 && fy.y > 0.0)) {
      throw Error(ErrorKind::ConfigError, "worker simulation needs worker-type truth columns");
    }
    if (fy.firm_id < 0 || fy.sector < 0 || fy.sector >= cfg.n_sectors) {
      throw Error(ErrorKind::ConfigError, "firm panel ids out of range for the configuration");
    }
    years.push_back(fy.year);
    max_firm = std::max(max_firm, fy.firm_id);
  }
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  const int first_year = years.front();

  // Firm effects: the model wage is additive in a firm term and the worker type.
  WorkerPanelTruth truth;
  truth.age_sex_beta = beta;
  truth.firm_effect.assign(static_cast<std::size_t>(max_firm) + 1, 0.0);
  {
    std::vector<double> sums(truth.firm_effect.size(), 0.0);
    std::vector<int> counts(truth.firm_effect.size(), 0);
    for (const FirmYear& fy : firms) {
      if (cfg.form != ProductionForm::Ces) continue;
      const ModelParams& p = sector_params(cfg, fy.sector);
      sums[static_cast<std::size_t>(fy.firm_id)] +=
          fy.omega + fy.omega_x * (p.theta - p.lambda_y * (1.0 - p.alpha_l));
      counts[static_cast<std::size_t>(fy.firm_id)] += 1;
    }
    for (const FirmYear& fy : firms) {
      if (cfg.form != ProductionForm::Ces) continue;
      const std::size_t j = static_cast<std::size_t>(fy.firm_id);
      const EquilibriumConstants c = compute_constants(sector_params(cfg, fy.sector));
      truth.firm_effect[j] = std::log(c.lambda_wage) + sums[j] / counts[j];
    }
  }
  const int n_bins = year_bin(years.back(), first_year) + 1;
  truth.year_bin_effect.resize(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) truth.year_bin_effect[static_cast<std::size_t>(b)] = cfg.year_bin_step * b;

  // Rows by (sector, year) so each sector-year is processed in firm order.
  std::map<std::pair<int, int>, std::vector<const FirmYear*>> by_sector_year;
  for (const FirmYear& fy : firms) by_sector_year[{fy.sector, fy.year}].push_back(&fy);
  for (auto& [key, rows] : by_sector_year) {
    std::sort(rows.begin(), rows.end(),
              [](const FirmYear* a, const FirmYear* b) { return a->firm_id < b->firm_id; });
  }

  std::vector<MatchRecord> matches;
  std::vector<double> signal;
  std::int64_t next_id = 0;

  auto new_worker = [&](RandomStream& rs, double target_h, double nu, int age_lo, int age_hi,
                        std::int32_t firm) {
    Worker w;
    w.id = next_id++;
    w.age = age_lo + static_cast<int>(rs.below(static_cast<std::uint64_t>(age_hi - age_lo + 1)));
    w.male = rs.bernoulli(cfg.male_share) ? 1 : 0;
    w.alpha = target_h + nu - age_sex_effect(beta, w.age, w.male);
    w.firm = firm;
    return w;
  };

  for (int s = 0; s < cfg.n_sectors; ++s) {
    std::unordered_map<std::int32_t, std::vector<Worker>> incumbents;
    for (std::size_t ti = 0; ti < years.size(); ++ti) {
      const int year = years[ti];
      auto it = by_sector_year.find({s, year});
      if (it == by_sector_year.end()) {
        incumbents.clear();
        continue;
      }
      const std::vector<const FirmYear*>& rows = it->second;
      RandomStream move_rs(derive_seed(cfg.seed, {4, static_cast<std::uint64_t>(s),
                                                  static_cast<std::uint64_t>(year)}));

      // Firm-type ordering for this year; movers stay near their rank.
      std::vector<std::size_t> order(rows.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rows[a]->x < rows[b]->x;
      });
      std::vector<std::size_t> rank(rows.size());
      for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
      std::unordered_map<std::int32_t, std::size_t> pos;
      for (std::size_t i = 0; i < rows.size(); ++i) pos[rows[i]->firm_id] = i;

      std::vector<Slot> slots(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        slots[i].row = rows[i];
        slots[i].capacity = std::max(0, static_cast<int>(std::lround(rows[i]->l)) - 2);
      }

      // Stayers, movers and exits among last year's workforce.
      std::vector<std::pair<std::size_t, Worker>> movers;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        auto inc = incumbents.find(rows[i]->firm_id);
        if (inc == incumbents.end()) continue;
        for (Worker w : inc->second) {
          w.age += 1;
          if (w.age > 64) continue;
          const bool moves = move_rs.bernoulli(cfg.mobility_rate);
          if (!moves && static_cast<int>(slots[i].staff.size()) < slots[i].capacity) {
            slots[i].staff.push_back(w);
          } else {
            movers.emplace_back(i, w);
          }
        }
      }
      const std::size_t nb = static_cast<std::size_t>(cfg.mobility_neighborhood);
      for (auto& [from, w] : movers) {
        const std::size_t r = rank[from];
        std::vector<std::size_t> candidates;
        const std::size_t lo = r >= nb ? r - nb : 0;
        const std::size_t hi = std::min(order.size() - 1, r + nb);
        for (std::size_t q = lo; q <= hi; ++q) {
          if (q != r) candidates.push_back(order[q]);
        }
        // Fisher-Yates with the portable bounded draw.
        for (std::size_t q = candidates.size(); q > 1; --q) {
          std::swap(candidates[q - 1], candidates[move_rs.below(q)]);
        }
        for (std::size_t dest : candidates) {
          if (static_cast<int>(slots[dest].staff.size()) < slots[dest].capacity) {
            w.firm = slots[dest].row->firm_id;
            slots[dest].staff.push_back(w);
            break;
          }
        }
      }

      incumbents.clear();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Slot& slot = slots[i];
        const FirmYear& fy = *slot.row;
        RandomStream rs(derive_seed(cfg.seed, {5, static_cast<std::uint64_t>(s),
                                               static_cast<std::uint64_t>(fy.firm_id),
                                               static_cast<std::uint64_t>(year)}));
        const double ln_x = std::log(fy.x);
        const double ln_y = std::log(fy.y);
        const bool first = ti == 0 || slot.staff.empty();
        while (static_cast<int>(slot.staff.size()) < slot.capacity) {
          slot.staff.push_back(new_worker(rs, ln_x, rs.normal(0.0, cfg.nontop_dispersion), 22,
                                          first ? 60 : 50, fy.firm_id));
        }
        std::sort(slot.staff.begin(), slot.staff.end(),
                  [](const Worker& a, const Worker& b) { return a.id < b.id; });

        // Keep every non-top worker, including the filler, clearly below the
        // top worker so the earnings ranking recovers the top.
        const double cap = 0.5 * (ln_y - ln_x);
        auto filler_dev = [&] {
          double sum = 0.0;
          for (const Worker& w : slot.staff) sum += h_of(w, beta) - ln_x;
          return -sum;
        };
        if (cap > 0.0) {
          for (;;) {
            std::size_t hi = slot.staff.size(), lo = slot.staff.size();
            double hi_dev = -std::numeric_limits<double>::infinity();
            double lo_dev = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < slot.staff.size(); ++q) {
              const double dev = h_of(slot.staff[q], beta) - ln_x;
              if (dev > hi_dev) {
                hi_dev = dev;
                hi = q;
              }
              if (dev < lo_dev) {
                lo_dev = dev;
                lo = q;
              }
            }
            if (hi == slot.staff.size()) break;
            // Replace the most over-qualified worker, or the least qualified
            // one when the filler would have to make up for it, with an
            // exact-type hire.
            std::size_t replace = slot.staff.size();
            if (hi_dev > cap) {
              replace = hi;
            } else if (filler_dev() > cap) {
              replace = lo;
            }
            if (replace == slot.staff.size()) break;
            slot.staff[replace] = new_worker(rs, ln_x, 0.0, 22, 50, fy.firm_id);
          }
        }

        auto emit = [&](const Worker& w, bool is_top, bool is_owner) {
          MatchRecord m;
          m.worker_id = w.id;
          m.firm_id = fy.firm_id;
          m.year = year;
          m.age = w.age;
          m.male = w.male;
          m.alpha_true = w.alpha;
          m.is_top = is_top;
          m.is_owner = is_owner;
          const double log_w = cfg.wage_intercept + h_of(w, beta) +
                               truth.firm_effect[static_cast<std::size_t>(fy.firm_id)] +
                               truth.year_bin_effect[static_cast<std::size_t>(year_bin(year, first_year))];
          matches.push_back(m);
          signal.push_back(log_w);
        };

        const Worker top = new_worker(rs, ln_y, 0.0, 30, 60, fy.firm_id);
        const Worker filler = new_worker(rs, ln_x + filler_dev(), 0.0, 22, 60, fy.firm_id);
        emit(top, true, false);
        emit(filler, false, false);
        for (const Worker& w : slot.staff) emit(w, false, false);
        if (cfg.owner_fraction > 0.0 && rs.bernoulli(cfg.owner_fraction)) {
          const Worker owner = new_worker(rs, ln_y + 0.5, 0.0, 30, 60, fy.firm_id);
          emit(owner, false, true);
        }
        incumbents[fy.firm_id] = std::move(slot.staff);
      }
    }
  }

  double noise_sd = cfg.earnings_noise_sd;
  if (cfg.target_r2 && !signal.empty()) {
    // Calibrate on the rows that survive the screens and the connected set.
    for (std::size_t i = 0; i < matches.size(); ++i) matches[i].earnings = std::exp(signal[i]);
    std::set<std::tuple<std::int64_t, std::int32_t, std::int32_t>> kept;
    for (const MatchRecord& m : largest_connected_set(apply_sample_screens(matches).matches).matches) {
      kept.emplace(m.worker_id, m.firm_id, m.year);
    }
    std::vector<double> sample;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (kept.count({matches[i].worker_id, matches[i].firm_id, matches[i].year})) sample.push_back(signal[i]);
    }
    if (sample.empty()) sample = signal;
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / sample.size();
    double var = 0.0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= sample.size();
    noise_sd = std::sqrt(var * (1.0 - *cfg.target_r2) / *cfg.target_r2);
  }
  truth.earnings_noise_sd = noise_sd;
  RandomStream noise_rs(derive_seed(cfg.seed, {6}));
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const double e = noise_sd > 0.0 ? noise_rs.normal(0.0, noise_sd) : 0.0;
    matches[i].earnings = std::exp(signal[i] + e);
  }

  std::sort(matches.begin(), matches.end(), [](const MatchRecord& a, const MatchRecord& b) {
    if (a.year != b.year) return a.year < b.year;
    if (a.firm_id != b.firm_id) return a.firm_id < b.firm_id;
    return a.worker_id < b.worker_id;
  });
  return WorkerPanel{std::move(matches), std::move(truth)};
}

}  // namespace matchprod
