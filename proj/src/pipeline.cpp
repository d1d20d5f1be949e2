#include "matchprod/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>

#include "matchprod/aggdecomp.hpp"
#include "matchprod/io.hpp"
#include "matchprod/linalg.hpp"
#include "matchprod/matcheff.hpp"
#include "matchprod/model.hpp"
#include "matchprod/paretofit.hpp"
#include "matchprod/rng.hpp"

namespace matchprod {

namespace fs = std::filesystem;

namespace {

using Key = std::pair<std::int32_t, std::int32_t>;

fs::path in_file(const RunConfig& cfg, const char* name) {
  const fs::path p = cfg.input() / name;
  if (!fs::exists(p)) throw Error(ErrorKind::MissingInput, p.string() + " not found");
  return p;
}

fs::path out_file(const RunConfig& cfg, const char* name) { return cfg.out_dir / name; }

bool sector_selected(const RunConfig& cfg, int sector) {
  return cfg.sectors.empty() || std::find(cfg.sectors.begin(), cfg.sectors.end(), sector) != cfg.sectors.end();
}

std::string form_tag(ProductionForm f) { return f == ProductionForm::Ces ? "ces" : "cd"; }

std::map<Key, const FirmYear*> index_firms(const FirmPanel& firms) {
  std::map<Key, const FirmYear*> out;
  for (const FirmYear& f : firms) out[{f.firm_id, f.year}] = &f;
  return out;
}

std::vector<QualityRow> quality_rows(const RunConfig& cfg, const FirmPanel& firms,
                                     const std::vector<FirmQuality>& quality) {
  const auto by_key = index_firms(firms);
  std::vector<QualityRow> rows;
  for (const FirmQuality& q : quality) {
    auto it = by_key.find({q.firm_id, q.year});
    if (it == by_key.end()) continue;
    if (!sector_selected(cfg, it->second->sector)) continue;
    rows.push_back({q.firm_id, it->second->sector, q.year, q.ln_y, q.ln_x});
  }
  if (rows.empty()) throw Error(ErrorKind::KeyMismatch, "firm quality does not match the firm table");
  return rows;
}

struct CoefTable {
  // sector -> name -> value
  std::map<std::int32_t, std::map<std::string, double>> values;
};

CoefTable read_coefficients(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_s = t.column("sector"), c_n = t.column("coefficient"), c_v = t.column("value");
  CoefTable out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.values[static_cast<std::int32_t>(t.integer(r, c_s))][t.rows[r][c_n]] = t.number(r, c_v);
  }
  return out;
}

std::vector<TfpRow> read_tfp(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_f = t.column("firm_id"), c_s = t.column("sector"), c_y = t.column("year"),
                    c_o = t.column("omega_hat");
  std::vector<TfpRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({static_cast<std::int32_t>(t.integer(r, c_f)), static_cast<std::int32_t>(t.integer(r, c_s)),
                   static_cast<std::int32_t>(t.integer(r, c_y)), t.number(r, c_o)});
  }
  return out;
}

void write_name_values(const fs::path& path, const std::vector<std::pair<std::string, double>>& rows) {
  CsvWriter w(path, {"name", "value"});
  for (const auto& [name, value] : rows) {
    w << name << value;
    w.end_row();
  }
}

std::map<std::string, double> read_name_values(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t c_n = t.column("name"), c_v = t.column("value");
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out[t.rows[r][c_n]] = t.number(r, c_v);
  return out;
}

// ---------------------------------------------------------------- decompose

struct VariantInput {
  std::string name;
  std::vector<int> years;
  std::vector<std::int32_t> firm_ids;
  std::vector<std::int32_t> sectors;
  std::vector<double> omega;
  std::vector<double> quality;
  std::vector<double> shares;
};

void write_variant_tables(const RunConfig& cfg, const std::vector<VariantInput>& variants) {
  CsvWriter measured(out_file(cfg, "measured.csv"),
                     {"variant", "firm_id", "sector", "year", "z", "omega", "quality", "share"});
  CsvWriter decomposition(out_file(cfg, "decomposition.csv"),
                          {"variant", "year", "n", "aggregate", "mean", "covariance", "omega_mean", "omega_cov",
                           "quality_mean", "quality_cov"});
  CsvWriter growth(out_file(cfg, "growth.csv"), {"variant", "series", "start", "end", "rate"});
  CsvWriter dispersion(out_file(cfg, "dispersion.csv"),
                       {"variant", "year", "n", "var_z", "var_omega", "var_quality", "cov_omega_quality", "iqr",
                        "p90_p10"});
  CsvWriter series(out_file(cfg, "series.csv"), {"year", "series", "value"});

  for (const VariantInput& v : variants) {
    for (std::size_t i = 0; i < v.years.size(); ++i) {
      measured << v.name << static_cast<int>(v.firm_ids[i]) << static_cast<int>(v.sectors[i]) << v.years[i]
               << v.omega[i] + v.quality[i] << v.omega[i] << v.quality[i] << v.shares[i];
      measured.end_row();
    }
    const auto rows = four_term(v.years, v.omega, v.quality, v.shares);
    std::map<int, std::size_t> counts;
    for (int y : v.years) ++counts[y];
    std::map<std::string, std::vector<YearValue>> named;
    for (const FourTermRow& r : rows) {
      decomposition << v.name << r.year << counts[r.year] << r.aggregate << r.omega_mean + r.quality_mean
                    << r.omega_cov + r.quality_cov << r.omega_mean << r.omega_cov << r.quality_mean
                    << r.quality_cov;
      decomposition.end_row();
      named["aggregate"].push_back({r.year, r.aggregate});
      named["omega_total"].push_back({r.year, r.omega_mean + r.omega_cov});
      named["quality_total"].push_back({r.year, r.quality_mean + r.quality_cov});
      named["omega_mean"].push_back({r.year, r.omega_mean});
      named["omega_cov"].push_back({r.year, r.omega_cov});
      named["quality_mean"].push_back({r.year, r.quality_mean});
      named["quality_cov"].push_back({r.year, r.quality_cov});
    }
    std::vector<std::pair<int, int>> windows = cfg.windows;
    if (windows.empty() && rows.size() >= 2) windows.emplace_back(rows.front().year, rows.back().year);
    for (const char* s : {"aggregate", "omega_total", "quality_total", "omega_mean", "omega_cov", "quality_mean",
                          "quality_cov"}) {
      for (const GrowthRow& g : growth_rates(named[s], windows)) {
        growth << v.name << s << g.start << g.end << g.rate;
        growth.end_row();
      }
    }
    for (const char* s : {"aggregate", "omega_total", "quality_total"}) {
      for (const YearValue& yv : normalize_to_year(named[s], rows.front().year)) {
        series << yv.year << v.name + "." + s << yv.value;
        series.end_row();
      }
    }
    for (const DispersionRow& d : dispersion_stats(v.years, v.omega, v.quality)) {
      dispersion << v.name << d.year << d.n << d.var_z << d.var_omega << d.var_quality << d.cov_omega_quality
                 << d.iqr << d.p90_p10;
      dispersion.end_row();
    }
  }
}

VariantInput make_variant(std::string name, const std::vector<MeasuredRow>& rows,
                          const std::map<Key, const FirmYear*>& firms) {
  VariantInput v;
  v.name = std::move(name);
  for (const MeasuredRow& m : rows) {
    auto it = firms.find({m.firm_id, m.year});
    if (it == firms.end()) throw Error(ErrorKind::KeyMismatch, "no firm row for measured productivity");
    v.years.push_back(m.year);
    v.firm_ids.push_back(m.firm_id);
    v.sectors.push_back(m.sector);
    v.omega.push_back(m.omega);
    v.quality.push_back(m.quality);
    v.shares.push_back(it->second->s);
  }
  // Shares are renormalized over the firms that survive estimation.
  v.shares = normalize_shares(v.years, v.shares);
  return v;
}

}  // namespace

// ---------------------------------------------------------------- stages

void stage_simulate(const RunConfig& cfg) {
  SimConfig sim = cfg.sim;
  sim.seed = cfg.seed;
  const FirmPanel firms = simulate_firm_panel(sim);
  const WorkerPanel workers = simulate_worker_panel(firms, sim);
  write_firms(out_file(cfg, "firms.csv"), firms, true);
  write_matches(out_file(cfg, "matches.csv"), workers.matches, true);

  CsvWriter w(out_file(cfg, "constants.csv"), {"sector", "psi", "a_base", "b_exponent", "c_density",
                                                "lambda_wage", "b0"});
  for (int s = 0; s < sim.n_sectors; ++s) {
    const ModelParams& p = sector_params(sim, s);
    if (sim.form == ProductionForm::Ces) {
      const EquilibriumConstants c = compute_constants(p);
      w << s << c.psi << c.a_base << c.b_exponent << c.c_density << c.lambda_wage << c.b0;
    } else {
      const CdConstants c = cd_constants(p, 0.0);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      w << s << nan << c.a << c.b << c.c_density << nan << std::log(c.a);
    }
    w.end_row();
  }
}

void stage_screen(const RunConfig& cfg) {
  const MatchTable matches = read_matches(in_file(cfg, "matches.csv"));
  const ScreenResult res = apply_sample_screens(matches, cfg.screen);
  write_matches(out_file(cfg, "screened_matches.csv"), res.matches, true);
  const ScreenReport& r = res.report;
  write_name_values(out_file(cfg, "screen_report.csv"),
                    {{"input", static_cast<double>(r.input)},
                     {"dropped_age", static_cast<double>(r.dropped_age)},
                     {"dropped_owner", static_cast<double>(r.dropped_owner)},
                     {"dropped_floor", static_cast<double>(r.dropped_floor)},
                     {"dropped_extra_jobs", static_cast<double>(r.dropped_extra_jobs)},
                     {"dropped_second_job", static_cast<double>(r.dropped_second_job)},
                     {"output", static_cast<double>(r.output)}});
}

void stage_akm(const RunConfig& cfg) {
  const MatchTable screened = read_matches(in_file(cfg, "screened_matches.csv"));
  const ConnectedSet cs = largest_connected_set(screened);
  AkmSpec spec = cfg.akm;
  const AkmEstimate est = estimate_akm(cs.matches, spec);
  write_matches(out_file(cfg, "akm_sample.csv"), cs.matches, true);

  {
    CsvWriter w(out_file(cfg, "akm_workers.csv"), {"worker_id", "alpha"});
    for (std::size_t i = 0; i < est.worker_ids.size(); ++i) {
      w << est.worker_ids[i] << est.alpha[i];
      w.end_row();
    }
  }
  {
    CsvWriter w(out_file(cfg, "akm_firms.csv"), {"firm_id", "psi", "component"});
    for (std::size_t i = 0; i < est.firm_ids.size(); ++i) {
      w << static_cast<int>(est.firm_ids[i]) << est.psi[i] << est.component[i];
      w.end_row();
    }
  }
  std::vector<std::pair<std::string, double>> coef{{"intercept", est.intercept}};
  for (int i = 0; i < kAgeSexTerms; ++i) coef.emplace_back("beta" + std::to_string(i), est.beta[static_cast<std::size_t>(i)]);
  for (std::size_t b = 0; b < est.year_effects.size(); ++b) {
    coef.emplace_back("year_bin" + std::to_string(b), est.year_effects[b]);
  }
  coef.emplace_back("first_year", est.first_year);
  coef.emplace_back("r2", est.r2);
  coef.emplace_back("adj_r2", est.adj_r2);
  coef.emplace_back("n_obs", static_cast<double>(est.n_obs));
  coef.emplace_back("n_params", static_cast<double>(est.n_params));
  coef.emplace_back("n_components", est.n_components);
  coef.emplace_back("iterations", est.iterations);
  coef.emplace_back("relative_residual", est.relative_residual);
  write_name_values(out_file(cfg, "akm_coefficients.csv"), coef);

  const ComponentStats& st = cs.stats;
  write_name_values(out_file(cfg, "connected_set.csv"),
                    {{"n_components", static_cast<double>(st.n_components)},
                     {"total_matches", static_cast<double>(st.total_matches)},
                     {"kept_matches", static_cast<double>(st.kept_matches)},
                     {"kept_workers", static_cast<double>(st.kept_workers)},
                     {"kept_firms", static_cast<double>(st.kept_firms)},
                     {"coverage", st.coverage}});

  CsvWriter w(out_file(cfg, "akm_decomposition.csv"),
              {"group", "n", "var_lnw", "var_worker", "var_firm", "var_xb", "var_resid", "cov_worker_firm",
               "cov_worker_xb", "cov_firm_xb", "cov_worker_resid", "cov_firm_resid", "cov_xb_resid",
               "worker_share", "closure_error"});
  for (const VarianceRow& r : variance_decomposition(est, cs.matches)) {
    w << r.group << r.n << r.var_lnw << r.var_worker << r.var_firm << r.var_xb << r.var_resid << r.cov_worker_firm
      << r.cov_worker_xb << r.cov_firm_xb << r.cov_worker_resid << r.cov_firm_resid << r.cov_xb_resid
      << r.worker_share << r.closure_error;
    w.end_row();
  }
}

void stage_quality(const RunConfig& cfg) {
  const MatchTable sample = read_matches(in_file(cfg, "akm_sample.csv"));
  const CsvTable workers = read_csv(in_file(cfg, "akm_workers.csv"));
  const auto coef = read_name_values(in_file(cfg, "akm_coefficients.csv"));

  AkmEstimate est;
  const std::size_t c_id = workers.column("worker_id"), c_a = workers.column("alpha");
  for (std::size_t r = 0; r < workers.rows.size(); ++r) {
    est.worker_index[workers.integer(r, c_id)] = est.worker_ids.size();
    est.worker_ids.push_back(workers.integer(r, c_id));
    est.alpha.push_back(workers.number(r, c_a));
  }
  for (int i = 0; i < kAgeSexTerms; ++i) {
    auto it = coef.find("beta" + std::to_string(i));
    if (it == coef.end()) throw Error(ErrorKind::MissingInput, "akm_coefficients.csv lacks beta" + std::to_string(i));
    est.beta[static_cast<std::size_t>(i)] = it->second;
  }

  const std::vector<double> h = worker_quality(est, sample);
  const std::vector<std::uint8_t> flags = identify_top_workers(sample, cfg.tie_ratio);
  const FirmQualityResult fq = firm_quality(sample, h, flags);
  write_firm_quality(out_file(cfg, "firm_quality.csv"), fq.rows);

  std::vector<double> ly, lx;
  for (const FirmQuality& q : fq.rows) {
    ly.push_back(q.ln_y);
    lx.push_back(q.ln_x);
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) agree += (flags[i] != 0) == sample[i].is_top;
  const double corr = ly.size() > 1 ? covariance(ly, lx) / std::sqrt(variance(ly) * variance(lx)) : 0.0;
  write_name_values(out_file(cfg, "quality_report.csv"),
                    {{"firm_years", static_cast<double>(fq.rows.size())},
                     {"dropped_no_nontop", static_cast<double>(fq.dropped_no_nontop)},
                     {"corr_ln_y_ln_x", corr},
                     {"top_flag_agreement", sample.empty() ? 0.0 : static_cast<double>(agree) / sample.size()}});
}

void stage_paretofit(const RunConfig& cfg) {
  CsvWriter w(out_file(cfg, "pareto.csv"),
              {"series", "lambda_hat", "standard_error", "r_squared", "threshold", "n_used"});
  auto emit = [&](const std::string& name, const TailFit& f) {
    w << name << f.lambda_hat << f.standard_error << f.r_squared << f.threshold << f.n_used;
    w.end_row();
    std::cout << name << ": lambda_hat=" << format_double(f.lambda_hat)
              << " standard_error=" << format_double(f.standard_error) << " r_squared=" << format_double(f.r_squared)
              << " threshold=" << format_double(f.threshold) << " n_used=" << f.n_used << "\n";
  };
  if (!cfg.input_file.empty()) {
    if (!fs::exists(cfg.input_file)) throw Error(ErrorKind::MissingInput, cfg.input_file.string() + " not found");
    std::vector<double> v = read_value_column(cfg.input_file);
    if (cfg.log_values) {
      for (double& a : v) a = std::exp(a);
    }
    emit(cfg.input_file.filename().string(), rank_regression(v, cfg.pareto_threshold));
    return;
  }
  const auto quality = read_firm_quality(in_file(cfg, "firm_quality.csv"));
  std::vector<double> y, x;
  std::vector<int> years;
  for (const FirmQuality& q : quality) {
    y.push_back(std::exp(q.ln_y));
    x.push_back(std::exp(q.ln_x));
    years.push_back(q.year);
  }
  if (cfg.pareto_year_dummies) {
    emit("top", rank_regression_with_years(y, years, cfg.pareto_threshold));
    emit("nontop", rank_regression_with_years(x, years, cfg.pareto_threshold));
  } else {
    emit("top", rank_regression(y, cfg.pareto_threshold));
    emit("nontop", rank_regression(x, cfg.pareto_threshold));
  }
}

void stage_estimate_pf(const RunConfig& cfg) {
  const FirmPanel firms = read_firms(in_file(cfg, "firms.csv"));
  const auto quality = read_firm_quality(in_file(cfg, "firm_quality.csv"));
  PfPanel panel;
  for (const PfRow& r : pf_panel_from_quality(firms, quality)) {
    if (sector_selected(cfg, r.sector)) panel.push_back(r);
  }
  if (panel.empty()) throw Error(ErrorKind::InsufficientPanel, "no rows in the selected sectors");

  PfOptions opt = cfg.pf;
  opt.seed = derive_seed(cfg.seed, {7});
  std::vector<PfEstimate> estimates = estimate_by_sector(panel, opt);

  if (cfg.bootstrap > 0) {
    std::map<std::int32_t, PfPanel> parts;
    for (const PfRow& r : panel) parts[r.sector].push_back(r);
    for (PfEstimate& e : estimates) {
      const BootstrapResult b =
          bootstrap_se(parts[e.sector], cfg.bootstrap, opt, derive_seed(cfg.seed, {8, static_cast<std::uint64_t>(e.sector)}));
      e.se = b.se;
    }
  }

  const std::string tag = opt.form == ProductionForm::Ces ? "" : "_cd";
  {
    CsvWriter w(cfg.out_dir / ("pf_coefficients" + tag + ".csv"),
                {"sector", "form", "coefficient", "value", "se", "n_obs", "n_pairs", "objective", "converged"});
    for (const PfEstimate& e : estimates) {
      for (std::size_t i = 0; i < e.names.size(); ++i) {
        const double se = i < e.se.size() ? e.se[i] : std::numeric_limits<double>::quiet_NaN();
        w << static_cast<int>(e.sector) << form_tag(e.form) << e.names[i] << e.coef[i] << se << e.n_obs
          << e.n_pairs << e.objective << static_cast<int>(e.converged);
        w.end_row();
      }
    }
  }
  const std::vector<double> phi = assemble_phi(panel, estimates);
  const std::vector<TfpRow> tfp = recover_tfp(panel, phi, estimates);
  CsvWriter w(cfg.out_dir / ("tfp" + tag + ".csv"), {"firm_id", "sector", "year", "omega_hat", "phi", "ln_f"});
  for (std::size_t i = 0; i < tfp.size(); ++i) {
    w << static_cast<int>(tfp[i].firm_id) << static_cast<int>(tfp[i].sector) << static_cast<int>(tfp[i].year)
      << tfp[i].omega_hat << phi[i] << panel[i].ln_f;
    w.end_row();
  }
}

void stage_matcheff(const RunConfig& cfg) {
  const FirmPanel firms = read_firms(in_file(cfg, "firms.csv"));
  const auto quality = read_firm_quality(in_file(cfg, "firm_quality.csv"));
  const std::vector<QualityRow> rows = quality_rows(cfg, firms, quality);
  const auto estimates = estimate_match_efficiency_by_sector(rows);
  const SlopeCheck slopes = general_slope_check(rows);

  {
    CsvWriter w(out_file(cfg, "matcheff.csv"),
                {"sector", "b0_hat", "rho_x_hat", "b1_hat", "n_pairs", "rho_outside_unit", "constant_gap"});
    for (const MatchEffEstimate& e : estimates) {
      w << static_cast<int>(e.sector) << e.b0_hat << e.rho_x_hat << e.b1_hat << e.n_pairs
        << static_cast<int>(e.rho_outside_unit) << static_cast<int>(e.constant_gap);
      w.end_row();
    }
  }
  {
    CsvWriter w(out_file(cfg, "slope_check.csv"), {"scope", "b1_hat"});
    for (const auto& [sector, b1] : slopes.by_sector) {
      w << std::to_string(sector) << b1;
      w.end_row();
    }
    w << "pooled" << slopes.pooled;
    w.end_row();
  }
  CsvWriter w(out_file(cfg, "omega_x.csv"), {"firm_id", "sector", "year", "omega_x"});
  for (const MatchEffEstimate& e : estimates) {
    for (const OmegaXRow& r : e.omega_x) {
      w << static_cast<int>(r.firm_id) << static_cast<int>(r.sector) << static_cast<int>(r.year) << r.omega_x;
      w.end_row();
    }
  }
}

void stage_decompose(const RunConfig& cfg) {
  const FirmPanel firms = read_firms(in_file(cfg, "firms.csv"));
  const auto firm_index = index_firms(firms);
  const auto quality = read_firm_quality(in_file(cfg, "firm_quality.csv"));
  const std::vector<QualityRow> qrows = quality_rows(cfg, firms, quality);

  std::vector<VariantInput> variants;
  const fs::path ces_coef = cfg.input() / "pf_coefficients.csv";
  const fs::path cd_coef = cfg.input() / "pf_coefficients_cd.csv";
  if (!fs::exists(ces_coef) && !fs::exists(cd_coef)) {
    throw Error(ErrorKind::MissingInput, "no production-function coefficients in " + cfg.input().string());
  }
  if (fs::exists(ces_coef)) {
    const CoefTable coef = read_coefficients(ces_coef);
    std::map<std::int32_t, double> theta;
    for (const auto& [s, c] : coef.values) {
      auto it = c.find("theta");
      if (it == c.end()) throw Error(ErrorKind::MissingCoefficients, "no theta for sector " + std::to_string(s));
      theta[s] = it->second;
    }
    const std::vector<TfpRow> tfp = read_tfp(in_file(cfg, "tfp.csv"));
    variants.push_back(make_variant("top", measured_productivity(tfp, qrows, theta, QualityVariant::Top), firm_index));
    const fs::path ox_path = cfg.input() / "omega_x.csv";
    if (fs::exists(ox_path)) {
      const CsvTable t = read_csv(ox_path);
      std::vector<OmegaXRow> ox;
      const std::size_t c_f = t.column("firm_id"), c_s = t.column("sector"), c_y = t.column("year"),
                        c_o = t.column("omega_x");
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ox.push_back({static_cast<std::int32_t>(t.integer(r, c_f)), static_cast<std::int32_t>(t.integer(r, c_s)),
                      static_cast<std::int32_t>(t.integer(r, c_y)), t.number(r, c_o)});
      }
      variants.push_back(make_variant(
          "nontop", measured_productivity(tfp, qrows, theta, QualityVariant::Nontop, ox), firm_index));
    }
  }
  if (fs::exists(cd_coef)) {
    const CoefTable coef = read_coefficients(cd_coef);
    std::map<std::int32_t, std::pair<double, double>> betas;
    for (const auto& [s, c] : coef.values) {
      auto bx = c.find("beta_x");
      auto by = c.find("beta_y");
      if (bx == c.end() || by == c.end()) {
        throw Error(ErrorKind::MissingCoefficients, "no Cobb-Douglas betas for sector " + std::to_string(s));
      }
      betas[s] = {bx->second, by->second};
    }
    std::map<Key, const QualityRow*> q;
    for (const QualityRow& r : qrows) q[{r.firm_id, r.year}] = &r;
    std::vector<CdInputRow> in;
    for (const TfpRow& t : read_tfp(in_file(cfg, "tfp_cd.csv"))) {
      auto it = q.find({t.firm_id, t.year});
      if (it == q.end()) throw Error(ErrorKind::KeyMismatch, "no quality for firm " + std::to_string(t.firm_id));
      in.push_back({t.firm_id, t.sector, t.year, t.omega_hat, it->second->ln_x, it->second->ln_y});
    }
    std::vector<MeasuredRow> rows;
    for (const CdMeasuredRow& m : cd_measured_productivity(in, betas)) {
      rows.push_back({m.firm_id, m.sector, m.year, m.z, m.eta, m.x_part + m.y_part, QualityVariant::CobbDouglas});
    }
    variants.push_back(make_variant("cd", rows, firm_index));
  }
  write_variant_tables(cfg, variants);
}

void stage_montecarlo(const RunConfig& cfg) {
  if (cfg.reps < 1) throw Error(ErrorKind::InvalidParam, "reps must be positive");
  // (sector, parameter) -> truth and estimates
  std::map<std::pair<int, std::string>, std::pair<double, std::vector<double>>> draws;
  CsvWriter reps(out_file(cfg, "montecarlo_reps.csv"), {"rep", "sector", "parameter", "truth", "estimate"});
  for (int r = 0; r < cfg.reps; ++r) {
    SimConfig sim = cfg.sim;
    sim.seed = derive_seed(cfg.seed, {100, static_cast<std::uint64_t>(r)});
    const FirmPanel firms = simulate_firm_panel(sim);
    PfPanel panel;
    for (const PfRow& row : pf_panel_from_truth(firms)) {
      if (sector_selected(cfg, row.sector)) panel.push_back(row);
    }
    PfOptions opt = cfg.pf;
    opt.form = sim.form;
    opt.seed = derive_seed(sim.seed, {7});
    auto record = [&](int sector, const std::string& name, double truth, double estimate) {
      auto& slot = draws[{sector, name}];
      slot.first = truth;
      slot.second.push_back(estimate);
      reps << r << sector << name << truth << estimate;
      reps.end_row();
    };
    for (const PfEstimate& e : estimate_by_sector(panel, opt)) {
      const ModelParams& p = sector_params(sim, e.sector);
      std::map<std::string, double> truth{{"beta_0", p.beta_0}, {"theta", p.theta},     {"alpha_l", p.alpha_l},
                                          {"alpha_k", p.alpha_k}, {"rho", p.rho},       {"beta_x", p.beta_x_cd},
                                          {"beta_y", p.beta_y_cd}};
      for (std::size_t i = 0; i < e.names.size(); ++i) record(e.sector, e.names[i], truth.at(e.names[i]), e.coef[i]);
    }
    if (sim.form == ProductionForm::Ces) {
      std::vector<QualityRow> rows;
      for (const FirmYear& f : firms) {
        if (sector_selected(cfg, f.sector)) rows.push_back({f.firm_id, f.sector, f.year, std::log(f.y), std::log(f.x)});
      }
      for (const MatchEffEstimate& e : estimate_match_efficiency_by_sector(rows)) {
        const ModelParams& p = sector_params(sim, e.sector);
        record(e.sector, "b0", compute_constants(p).b0, e.b0_hat);
        record(e.sector, "rho_x", p.rho_x, e.rho_x_hat);
        record(e.sector, "b1", 1.0, e.b1_hat);
      }
    }
  }
  CsvWriter w(out_file(cfg, "montecarlo.csv"),
              {"sector", "parameter", "truth", "median", "mad", "median_abs_error", "reps"});
  for (const auto& [key, slot] : draws) {
    const std::vector<double>& v = slot.second;
    const double med = quantile(v, 0.5);
    std::vector<double> dev, err;
    for (double a : v) {
      dev.push_back(std::abs(a - med));
      err.push_back(std::abs(a - slot.first));
    }
    w << key.first << key.second << slot.first << med << quantile(dev, 0.5) << quantile(err, 0.5) << v.size();
    w.end_row();
  }
}

void run(const RunConfig& cfg) {
  static const std::map<std::string, std::function<void(const RunConfig&)>> stages{
      {"simulate", stage_simulate},       {"screen", stage_screen},     {"akm", stage_akm},
      {"quality", stage_quality},         {"paretofit", stage_paretofit}, {"estimate-pf", stage_estimate_pf},
      {"matcheff", stage_matcheff},       {"decompose", stage_decompose}, {"montecarlo", stage_montecarlo}};
  auto tagged = [&](const std::string& name, const RunConfig& c) {
    try {
      stages.at(name)(c);
    } catch (const Error& e) {
      throw StageFailure(name, e);
    }
  };
  try {
    fs::create_directories(cfg.out_dir);
  } catch (const fs::filesystem_error& e) {
    throw StageFailure(cfg.subcommand, Error(ErrorKind::MissingInput, e.what()));
  }
  {
    std::ofstream m(cfg.out_dir / ("manifest-" + cfg.subcommand + ".txt"), std::ios::binary);
    if (!m) throw StageFailure(cfg.subcommand, Error(ErrorKind::MissingInput, "cannot write manifest"));
    m << manifest_text(cfg);
  }
  if (cfg.subcommand != "pipeline") {
    if (!stages.count(cfg.subcommand)) {
      throw StageFailure(cfg.subcommand, Error(ErrorKind::ConfigParse, "unknown subcommand"));
    }
    tagged(cfg.subcommand, cfg);
    return;
  }
  // Every stage of the pipeline reads what the previous ones wrote.
  RunConfig c = cfg;
  c.input_dir = cfg.out_dir;
  c.input_file.clear();
  for (const char* s : {"simulate", "screen", "akm", "quality", "paretofit", "estimate-pf", "matcheff"}) {
    tagged(s, c);
  }
  if (cfg.pf.form == ProductionForm::CobbDouglas) {
    // The decomposition needs theta from the CES fit as well.
    RunConfig ces = c;
    ces.pf.form = ProductionForm::Ces;
    tagged("estimate-pf", ces);
  }
  tagged("decompose", c);
}

}  // namespace matchprod
