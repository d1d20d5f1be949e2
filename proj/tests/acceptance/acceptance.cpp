// Acceptance checks 1-9. Prints one "criterion N: PASS/FAIL" line each and
// exits non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "matchprod/aggdecomp.hpp"
#include "matchprod/akm.hpp"
#include "matchprod/io.hpp"
#include "matchprod/matcheff.hpp"
#include "matchprod/model.hpp"
#include "matchprod/paretofit.hpp"
#include "matchprod/pipeline.hpp"
#include "matchprod/prodfn.hpp"
#include "matchprod/rng.hpp"
#include "matchprod/synthgen.hpp"
#include "oracles.hpp"

using namespace matchprod;
namespace fs = std::filesystem;

namespace {

void note(const char* fmt, double a = 0, double b = 0, double c = 0, double d = 0) {
  std::printf("  ");
  std::printf(fmt, a, b, c, d);
  std::printf("\n");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("matchprod_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parameter sets with a positive matching constant and the PAM sufficient
// condition.
std::vector<ModelParams> pam_sets() {
  std::vector<ModelParams> out;
  auto add = [&](double theta, double al, double lx, double ly, double sigma, double ax = 0.5) {
    ModelParams p;
    p.theta = theta, p.alpha_l = al, p.lambda_x = lx, p.lambda_y = ly, p.sigma = sigma;
    p.alpha_x = ax, p.alpha_y = 1.0 - ax;
    out.push_back(p);
  };
  out.push_back(ModelParams{});
  add(0.6, 0.6, 2.0, 1.5, 2.0);
  add(0.5, 0.5, 1.5, 2.2, 1.5);
  add(0.2, 0.3, 2.0, 2.0, 3.0, 0.3);
  add(1.6, 0.8, 3.0, 1.2, 6.0);
  add(-0.5, 0.5, 2.5, 2.0, 0.5);
  add(0.417, 0.777, 2.06, 1.9, 3.0);
  std::vector<ModelParams> ok;
  for (const ModelParams& p : out) {
    if (pam_check(p).sufficient_ok) ok.push_back(p);
  }
  return ok;
}

bool criterion1() {
  bool pass = true;
  const auto sets = pam_sets();
  int ces_sets = 0, alternative_checked = 0;
  double worst = 0.0, worst_alternative = 1e300;
  for (const ModelParams& p : sets) {
    const EquilibriumConstants c = compute_constants(p);
    const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
    for (double ox : {0.0, 0.25}) {
      const long double a = slope_factor(ox, c);
      worst = std::max({worst, oracle::max_abs(ode_residual([a](long double x) { return a * x; }, grid, p,
                                                            ProductionForm::Ces, ox)),
                        oracle::max_abs(oracle::foc_ode_residual([a](long double x) { return a * x; },
                                                                 [a](long double) { return a; },
                                                                 oracle::ces(p, 0.1, ox), p, grid))});
    }
    ++ces_sets;
    if (p.lambda_x != p.lambda_y) {
      const double psi = oracle::psi_alternative(p);
      const double residual =
          psi > 0.0 ? oracle::max_abs(oracle::foc_ode_residual(
                          [a = std::pow(psi, 1.0 / (1.0 - p.sigma))](long double x) { return a * x; },
                          [a = std::pow(psi, 1.0 / (1.0 - p.sigma))](long double) { return a; },
                          oracle::ces(p, 0.0, 0.0), p, grid))
                    : std::numeric_limits<double>::infinity();  // no matching function at all
      worst_alternative = std::min(worst_alternative, residual);
      ++alternative_checked;
    }
  }
  int cd_sets = 0;
  double worst_cd = 0.0;
  std::vector<ModelParams> cd(5);
  cd[0].alpha_l = 0.6, cd[0].lambda_x = 2.0, cd[0].lambda_y = 1.5;
  cd[2].alpha_l = 0.5, cd[2].lambda_x = 3.0, cd[2].lambda_y = 2.5, cd[2].beta_x_cd = 0.5, cd[2].beta_y_cd = 0.4;
  cd[3].alpha_l = 0.7, cd[3].beta_x_cd = 0.2, cd[3].beta_y_cd = 0.1;
  cd[4].lambda_x = 2.5, cd[4].lambda_y = 2.0, cd[4].beta_x_cd = 0.4, cd[4].beta_y_cd = 0.2;
  for (const ModelParams& p : cd) {
    if (!cd_pam_condition(p)) continue;
    ++cd_sets;
    for (double eta : {0.0, 0.4}) {
      const CdConstants k = cd_constants(p, eta);
      const long double a = k.a, b = k.b;
      const auto grid = log_grid(p.x_min, 100 * p.x_min, 100);
      auto T = [a, b](long double x) { return a * std::pow(x, b); };
      auto Tp = [a, b](long double x) { return a * b * std::pow(x, b - 1); };
      worst_cd = std::max({worst_cd, oracle::max_abs(ode_residual(T, grid, p, ProductionForm::CobbDouglas)),
                           oracle::max_abs(oracle::foc_ode_residual(T, Tp, oracle::cobb_douglas(p, eta), p, grid))});
    }
  }
  note("CES sets %.0f, max residual %.2e; CD sets %.0f, max residual %.2e", ces_sets, worst, cd_sets, worst_cd);
  note("alternative matching constant: smallest residual %.2e over %.0f sets", worst_alternative, alternative_checked);
  pass = ces_sets >= 5 && cd_sets >= 5 && worst < 1e-8 && worst_cd < 1e-8 && alternative_checked >= 1 &&
         worst_alternative > 1e-4;
  return pass;
}

bool criterion2() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(1.0, 50.0), uo(-0.3, 0.3);
  const auto sets = pam_sets();
  double worst_foc = 0.0, worst_quad = 0.0;
  int states = 0;
  for (int i = 0; i < 100; ++i) {
    ModelParams p = sets[static_cast<std::size_t>(i) % sets.size()];
    const double x = ux(rng), om = uo(rng), ox = uo(rng);
    // Supports line up under the matching with this state's efficiency.
    p.y_min = slope_factor(ox, compute_constants(p)) * p.x_min;
    const EquilibriumConstants c = compute_constants(p);
    const auto tech = oracle::ces(p, om, ox);
    const double y = match_T(x, ox, c);
    const double l = labor_demand(x, ox, c, p);
    const double w = wage(x, om, ox, c, p);
    const double h = x * 1e-5;
    const double wp = (wage(x + h, om, ox, c, p) - wage(x - h, om, ox, c, p)) / (2 * h);
    const double tp = (match_T(x + h, ox, c) - match_T(x - h, ox, c)) / (2 * h);
    const double fx = static_cast<double>(tech.f_x(x, y, l));
    const double fl = static_cast<double>(tech.f_l(x, y, l));
    const double hx = static_cast<double>(oracle::density_ratio(p, x, y));
    worst_foc = std::max({worst_foc, std::abs(fx - wp * l) / fx, std::abs(fl - w) / w, std::abs(tp * l - hx) / hx});

    auto T = [&](double v) { return match_T(v, ox, c); };
    auto Ti = [&](double v) { return inverse_match(v, ox, c); };
    auto L = [&](double v) { return labor_demand(v, ox, c, p); };
    const double supply = oracle::supply_above(p, x);
    worst_quad = std::max(worst_quad, std::abs(oracle::demand_above(p, x, T, Ti, L) - supply) / supply);
    ++states;
  }
  note("%.0f states: max first-order error %.2e, max market-clearing error %.2e", states, worst_foc, worst_quad);
  return states == 100 && worst_foc < 1e-8 && worst_quad < 1e-6;
}

bool criterion3() {
  SimConfig cfg;
  cfg.n_firms = 200;
  cfg.years = 10;
  cfg.mobility_rate = 0.3;
  const FirmPanel firms = simulate_firm_panel(cfg);
  const WorkerPanel workers = simulate_worker_panel(firms, cfg);
  const MatchTable sample = largest_connected_set(apply_sample_screens(workers.matches).matches).matches;
  AkmSpec spec;
  spec.tolerance = 1e-13;
  const AkmEstimate est = estimate_akm(sample, spec);

  std::map<std::int64_t, double> truth;
  for (const MatchRecord& m : sample) truth[m.worker_id] = m.alpha_true;
  double mean = 0.0;
  for (const auto& [id, a] : truth) mean += a;
  mean /= static_cast<double>(truth.size());
  double worst = 0.0;
  for (const auto& [id, a] : truth) worst = std::max(worst, std::abs(est.alpha_of(id) - (a - mean)));
  const auto& fe = workers.truth.firm_effect;
  const double ref = fe[static_cast<std::size_t>(est.firm_ids.front())];
  for (std::size_t j = 0; j < est.firm_ids.size(); ++j) {
    worst = std::max(worst, std::abs(est.psi[j] - (fe[static_cast<std::size_t>(est.firm_ids[j])] - ref)));
  }
  note("noiseless: %.0f workers, %.0f firms, max fixed-effect error %.2e", static_cast<double>(truth.size()),
       static_cast<double>(est.firm_ids.size()), worst);

  SimConfig noisy = cfg;
  noisy.target_r2 = 0.75;
  const WorkerPanel nw = simulate_worker_panel(firms, noisy);
  const AkmEstimate ne =
      estimate_akm(largest_connected_set(apply_sample_screens(nw.matches).matches).matches);
  note("design fit 0.75: R2 %.4f, adjusted R2 %.4f", ne.r2, ne.adj_r2);
  return est.n_components == 1 && worst < 1e-8 && std::abs(ne.adj_r2 - 0.75) < 0.03;
}

bool criterion4() {
  const double lambda = 1.80, threshold = -0.2;
  int good = 0;
  double lo = 1e9, hi = -1e9, r2_min = 1.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomStream rs(derive_seed(seed, {4}));
    // Power-law tail above the threshold and a flat body of 15% below it.
    const std::size_t n = 100000, body = 15000;
    std::vector<double> v = draw_pareto(lambda, std::exp(threshold), n - body, rs);
    for (std::size_t i = 0; i < body; ++i) v.push_back(std::exp(threshold - 1.0 + rs.uniform()));
    const TailFit fit = rank_regression(v, threshold);
    lo = std::min(lo, fit.lambda_hat);
    hi = std::max(hi, fit.lambda_hat);
    r2_min = std::min(r2_min, fit.r_squared);
    if (std::abs(fit.lambda_hat - lambda) <= 0.05 && fit.r_squared > 0.99) ++good;
  }
  note("lambda_hat in [%.4f, %.4f], min R2 %.5f, %.0f of 20 seeds within tolerance", lo, hi, r2_min, good);
  return good >= 19;
}

bool criterion5() {
  const ModelParams truth;
  const std::vector<double> target{truth.theta, truth.alpha_l, truth.alpha_k, truth.rho};
  std::vector<std::vector<double>> errors(4);
  for (std::uint64_t rep = 1; rep <= 20; ++rep) {
    SimConfig cfg;
    cfg.n_firms = 2000;
    cfg.years = 12;
    cfg.seed = derive_seed(rep, {5});
    const PfEstimate est = estimate_production(pf_panel_from_truth(simulate_firm_panel(cfg)));
    const std::vector<double> got{est.theta(), est.alpha_l(), est.alpha_k(), est.rho()};
    for (std::size_t i = 0; i < 4; ++i) errors[i].push_back(std::abs(got[i] - target[i]));
  }
  bool pass = true;
  const char* names[] = {"theta", "alpha_l", "alpha_k", "rho"};
  for (std::size_t i = 0; i < 4; ++i) {
    const double m = median(errors[i]);
    std::printf("  median absolute error %-7s %.4f\n", names[i], m);
    pass = pass && m < 0.05;
  }

  // Bootstrap standard errors at n and 4n firms.
  auto se_at = [](int n_firms) {
    SimConfig cfg;
    cfg.n_firms = n_firms;
    cfg.years = 12;
    cfg.seed = derive_seed(55, {5});
    PfOptions opt;
    opt.perturbed_starts = 2;
    return bootstrap_se(pf_panel_from_truth(simulate_firm_panel(cfg)), 30, opt, 9).se;
  };
  const auto small = se_at(1000);
  const auto large = se_at(4000);
  double log_ratio = 0.0;
  bool positive = true;
  for (std::size_t i = 0; i < small.size(); ++i) {
    positive = positive && small[i] > 0.0 && large[i] > 0.0;
    log_ratio += std::log(large[i] / small[i]);
  }
  const double ratio = std::exp(log_ratio / static_cast<double>(small.size()));
  note("bootstrap SE ratio 4000 vs 1000 firms (geometric mean) %.3f, expected 0.5", ratio);
  return pass && positive && std::abs(ratio - 0.5) < 0.15;
}

bool criterion6() {
  bool pass = true;
  for (double rho_x : {0.65, 0.7, 0.75, 0.3}) {
    SimConfig cfg;
    cfg.n_firms = 2000;
    cfg.years = 12;
    cfg.seed = derive_seed(static_cast<std::uint64_t>(rho_x * 100), {6});
    cfg.sector_params[0].rho_x = rho_x;
    std::vector<QualityRow> rows;
    for (const FirmYear& f : simulate_firm_panel(cfg)) {
      rows.push_back({f.firm_id, f.sector, f.year, std::log(f.y), std::log(f.x)});
    }
    const MatchEffEstimate e = estimate_match_efficiency(rows);
    const double b0 = compute_constants(cfg.sector_params[0]).b0;
    const bool in_band = rho_x >= 0.6 && rho_x <= 0.8;
    const bool band_ok = !in_band || (e.rho_x_hat >= 0.6 && e.rho_x_hat <= 0.8);
    note("rho_x %.2f: rho_x_hat %.4f, b0 error %.4f, b1_hat %.4f", rho_x, e.rho_x_hat, e.b0_hat - b0, e.b1_hat);
    pass = pass && std::abs(e.b0_hat - b0) <= 0.05 && std::abs(e.rho_x_hat - rho_x) <= 0.05 && band_ok &&
           std::abs(e.b1_hat - 1.0) <= 0.02;
  }
  return pass;
}

bool criterion7() {
  SimConfig cfg;
  cfg.n_firms = 300;
  cfg.years = 10;
  cfg.omega_drift = 0.02;
  cfg.x_drift = -0.04;
  cfg.drift_size_loading = 0.3;
  const FirmPanel firms = simulate_firm_panel(cfg);
  std::vector<int> years;
  std::vector<double> omega, quality, shares;
  const double theta = cfg.sector_params[0].theta;
  for (const FirmYear& f : firms) {
    years.push_back(f.year);
    omega.push_back(f.omega);
    quality.push_back(theta * std::log(f.y));
    shares.push_back(f.s);
  }
  std::vector<double> z(omega.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = omega[i] + quality[i];
  double worst = 0.0;
  for (const DecompositionRow& r : olley_pakes(years, z, shares)) {
    worst = std::max(worst, std::abs(r.aggregate - r.mean - r.covariance));
  }
  for (const FourTermRow& r : four_term(years, omega, quality, shares)) {
    worst = std::max(worst, std::abs(r.aggregate - r.omega_mean - r.omega_cov - r.quality_mean - r.quality_cov));
  }
  for (const DispersionRow& d : dispersion_stats(years, omega, quality)) worst = std::max(worst, std::abs(d.closure));

  const WorkerPanel workers = simulate_worker_panel(firms, cfg);
  const MatchTable sample = largest_connected_set(apply_sample_screens(workers.matches).matches).matches;
  const AkmEstimate est = estimate_akm(sample);
  double worst_var = 0.0;
  for (const VarianceRow& v : variance_decomposition(est, sample)) {
    worst_var = std::max(worst_var, std::abs(v.closure_error));
  }
  note("max OP / four-term / dispersion identity error %.2e; wage variance closure %.2e", worst, worst_var);

  const auto series = aggregate(years, z, shares);
  const int first = series.front().year, last = series.back().year, mid = first + 4;
  const auto g = growth_rates(series, {{first, last}, {first, mid}, {mid, last}});
  const double split = (g[0].rate * (last - first) - g[1].rate * (mid - first) - g[2].rate * (last - mid)) /
                       static_cast<double>(last - first);
  note("growth splitting identity error %.2e", std::abs(split));
  return worst < 1e-12 && worst_var < 1e-12 && std::abs(split) < 1e-10;
}

RunConfig decline_scenario(std::uint64_t seed, const fs::path& out) {
  RunConfig cfg;
  apply_config(cfg, {{"sim.n_firms", "1000"},
                     {"sim.years", "13"},
                     {"sim.omega_drift", "0.0207"},
                     {"sim.x_drift", "-0.0422"},
                     {"sim.omega_x_drift", "-0.0166"},
                     {"sim.drift_size_loading", "0.3"},
                     {"sim.omega_sd_growth", "0.03"},
                     {"sim.labor_firm_sd", "0.8"},
                     {"pf.year_effects", "true"}});
  cfg.seed = seed;
  cfg.out_dir = out;
  return cfg;
}

bool criterion8() {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const fs::path dir = scratch("decline");
    run(decline_scenario(seed, dir));
    const CsvTable t = read_csv(dir / "growth.csv");
    std::map<std::string, double> rate;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (t.rows[r][t.column("variant")] == "top") rate[t.rows[r][t.column("series")]] = t.number(r, t.column("rate"));
    }
    const bool ok = rate.at("aggregate") < 0.0 && rate.at("omega_mean") > 0.0 && rate.at("omega_cov") > 0.0 &&
                    rate.at("quality_mean") < 0.0 && rate.at("quality_cov") < 0.0;
    std::printf("  seed %2llu: aggregate %+.3f  omega mean %+.3f cov %+.3f  quality mean %+.3f cov %+.3f  %s\n",
                static_cast<unsigned long long>(seed), rate.at("aggregate"), rate.at("omega_mean"),
                rate.at("omega_cov"), rate.at("quality_mean"), rate.at("quality_cov"), ok ? "ok" : "miss");
    if (ok) ++good;
    fs::remove_all(dir);
  }
  note("sign pattern reproduced in %.0f of 20 seeds", good);
  return good >= 18;
}

bool criterion9() {
  const fs::path a = scratch("determinism");
  const fs::path b = scratch("determinism_first");
  RunConfig cfg;
  apply_config(cfg, {{"sim.n_firms", "400"}, {"sim.years", "8"}, {"pf.bootstrap", "3"}});
  cfg.seed = 424242;
  cfg.out_dir = a;
  run(cfg);
  for (const auto& e : fs::directory_iterator(a)) fs::copy_file(e.path(), b / e.path().filename());
  run(cfg);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
  int differ = 0;
  for (const std::string& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) {
      std::printf("  differs: %s\n", n.c_str());
      ++differ;
    }
  }
  note("%.0f artifacts compared, %.0f differ", static_cast<double>(names.size()), differ);
  fs::remove_all(a);
  fs::remove_all(b);
  return names.size() >= 20 && differ == 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<bool()>> checks{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                  criterion6, criterion7, criterion8, criterion9};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(n)) continue;
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    try {
      pass = checks[i]();
    } catch (const std::exception& e) {
      std::printf("  error: %s\n", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("  %.1fs\n", secs);
    std::printf("criterion %d: %s\n", n, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
