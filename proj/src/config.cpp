#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "matchprod/io.hpp"
#include "matchprod/pipeline.hpp"

namespace matchprod {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& v) {
  throw Error(ErrorKind::ConfigParse, "invalid value '" + v + "' for " + key);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, v);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) bad_value(key, v);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') bad_value(key, v);
    const unsigned long long d = std::stoull(v, &used);
    if (used != v.size()) bad_value(key, v);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Access>
Field real(std::string key, Access access) {
  return {key, [access, key](RunConfig& c, const std::string& v) { access(c) = parse_double(key, v); },
          [access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); }};
}

template <class Access>
Field integer(std::string key, Access access) {
  return {key,
          [access, key](RunConfig& c, const std::string& v) {
            access(c) = static_cast<std::remove_reference_t<decltype(access(c))>>(parse_int(key, v));
          },
          [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); }};
}

template <class Access>
Field boolean(std::string key, Access access) {
  return {key, [access, key](RunConfig& c, const std::string& v) { access(c) = parse_bool(key, v); },
          [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Access>
Field optional_real(std::string key, Access access) {
  return {key,
          [access, key](RunConfig& c, const std::string& v) {
            if (v == "none") {
              access(c).reset();
            } else {
              access(c) = parse_double(key, v);
            }
          },
          [access](const RunConfig& c) {
            const auto& o = access(const_cast<RunConfig&>(c));
            return o ? format_double(*o) : std::string("none");
          }};
}

template <class Access>
Field path(std::string key, Access access) {
  return {key, [access](RunConfig& c, const std::string& v) { access(c) = v; },
          [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)).string(); }};
}

std::string form_name(ProductionForm f) { return f == ProductionForm::Ces ? "ces" : "cd"; }

ProductionForm parse_form(const std::string& key, const std::string& v) {
  if (v == "ces") return ProductionForm::Ces;
  if (v == "cd") return ProductionForm::CobbDouglas;
  bad_value(key, v);
}

#define MP_ACCESS(expr) [](RunConfig & c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"run.subcommand",
                 [](RunConfig& c, const std::string& v) {
                   const auto& s = subcommands();
                   if (std::find(s.begin(), s.end(), v) == s.end()) bad_value("run.subcommand", v);
                   c.subcommand = v;
                 },
                 [](const RunConfig& c) { return c.subcommand; }});
    f.push_back(path("run.out", MP_ACCESS(out_dir)));
    f.push_back(path("run.input", MP_ACCESS(input_dir)));
    f.push_back(path("run.input_file", MP_ACCESS(input_file)));
    f.push_back({"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64("run.seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back({"run.sectors",
                 [](RunConfig& c, const std::string& v) {
                   c.sectors.clear();
                   if (v == "all") return;
                   for (const std::string& s : split_list(v)) c.sectors.push_back(static_cast<int>(parse_int("run.sectors", s)));
                 },
                 [](const RunConfig& c) {
                   if (c.sectors.empty()) return std::string("all");
                   std::string out;
                   for (std::size_t i = 0; i < c.sectors.size(); ++i) out += (i ? "," : "") + std::to_string(c.sectors[i]);
                   return out;
                 }});

    f.push_back(integer("sim.n_firms", MP_ACCESS(sim.n_firms)));
    f.push_back(integer("sim.n_sectors", MP_ACCESS(sim.n_sectors)));
    f.push_back(integer("sim.years", MP_ACCESS(sim.years)));
    f.push_back(integer("sim.first_year", MP_ACCESS(sim.first_year)));
    f.push_back({"sim.form", [](RunConfig& c, const std::string& v) { c.sim.form = parse_form("sim.form", v); },
                 [](const RunConfig& c) { return form_name(c.sim.form); }});
    f.push_back(real("sim.mobility_rate", MP_ACCESS(sim.mobility_rate)));
    f.push_back(integer("sim.mobility_neighborhood", MP_ACCESS(sim.mobility_neighborhood)));
    f.push_back(real("sim.workers_per_firm_scale", MP_ACCESS(sim.workers_per_firm_scale)));
    f.push_back(real("sim.type_truncation_quantile", MP_ACCESS(sim.type_truncation_quantile)));
    f.push_back(real("sim.price_g_rho", MP_ACCESS(sim.price_g_rho)));
    f.push_back(real("sim.price_g_sd", MP_ACCESS(sim.price_g_sd)));
    f.push_back(real("sim.price_m_rho", MP_ACCESS(sim.price_m_rho)));
    f.push_back(real("sim.price_m_sd", MP_ACCESS(sim.price_m_sd)));
    f.push_back(real("sim.intermediate_c0", MP_ACCESS(sim.intermediate_c[0])));
    f.push_back(real("sim.intermediate_c1", MP_ACCESS(sim.intermediate_c[1])));
    f.push_back(real("sim.intermediate_c2", MP_ACCESS(sim.intermediate_c[2])));
    f.push_back(real("sim.intermediate_c3", MP_ACCESS(sim.intermediate_c[3])));
    f.push_back(real("sim.intermediate_c4", MP_ACCESS(sim.intermediate_c[4])));
    f.push_back(real("sim.intermediate_cubic", MP_ACCESS(sim.intermediate_cubic)));
    f.push_back(real("sim.capital_log_mean", MP_ACCESS(sim.capital_log_mean)));
    f.push_back(real("sim.capital_firm_sd", MP_ACCESS(sim.capital_firm_sd)));
    f.push_back(real("sim.capital_rho", MP_ACCESS(sim.capital_rho)));
    f.push_back(real("sim.capital_loading", MP_ACCESS(sim.capital_loading)));
    f.push_back(real("sim.capital_sd", MP_ACCESS(sim.capital_sd)));
    f.push_back(real("sim.omega_drift", MP_ACCESS(sim.omega_drift)));
    f.push_back(real("sim.omega_x_drift", MP_ACCESS(sim.omega_x_drift)));
    f.push_back(real("sim.x_drift", MP_ACCESS(sim.x_drift)));
    f.push_back(real("sim.drift_size_loading", MP_ACCESS(sim.drift_size_loading)));
    f.push_back(real("sim.omega_sd_growth", MP_ACCESS(sim.omega_sd_growth)));
    f.push_back(optional_real("sim.omega_init_sd", MP_ACCESS(sim.omega_init_sd)));
    f.push_back(real("sim.labor_noise_sd", MP_ACCESS(sim.labor_noise_sd)));
    f.push_back(real("sim.labor_firm_sd", MP_ACCESS(sim.labor_firm_sd)));
    f.push_back(real("sim.cd_match_noise_sd", MP_ACCESS(sim.cd_match_noise_sd)));
    f.push_back(real("sim.wage_intercept", MP_ACCESS(sim.wage_intercept)));
    for (int i = 0; i < kAgeSexTerms; ++i) {
      f.push_back(real("sim.age_sex_beta" + std::to_string(i),
                       [i](RunConfig& c) -> double& { return c.sim.age_sex_beta[static_cast<std::size_t>(i)]; }));
    }
    f.push_back(real("sim.year_bin_step", MP_ACCESS(sim.year_bin_step)));
    f.push_back(real("sim.earnings_noise_sd", MP_ACCESS(sim.earnings_noise_sd)));
    f.push_back(optional_real("sim.target_r2", MP_ACCESS(sim.target_r2)));
    f.push_back(real("sim.nontop_dispersion", MP_ACCESS(sim.nontop_dispersion)));
    f.push_back(real("sim.owner_fraction", MP_ACCESS(sim.owner_fraction)));
    f.push_back(real("sim.male_share", MP_ACCESS(sim.male_share)));

    f.push_back(integer("screen.min_age", MP_ACCESS(screen.min_age)));
    f.push_back(integer("screen.max_age", MP_ACCESS(screen.max_age)));
    f.push_back(real("screen.earnings_floor", MP_ACCESS(screen.earnings_floor)));
    f.push_back(real("screen.second_job_ratio", MP_ACCESS(screen.second_job_ratio)));
    f.push_back(boolean("screen.drop_owners", MP_ACCESS(screen.drop_owners)));

    f.push_back(real("akm.tolerance", MP_ACCESS(akm.tolerance)));
    f.push_back(integer("akm.max_iterations", MP_ACCESS(akm.max_iterations)));
    f.push_back(boolean("akm.require_connected", MP_ACCESS(akm.require_connected)));

    f.push_back(real("quality.tie_ratio", MP_ACCESS(tie_ratio)));

    f.push_back(real("pareto.threshold", MP_ACCESS(pareto_threshold)));
    f.push_back(boolean("pareto.year_dummies", MP_ACCESS(pareto_year_dummies)));
    f.push_back(boolean("pareto.log_values", MP_ACCESS(log_values)));

    f.push_back({"pf.form", [](RunConfig& c, const std::string& v) { c.pf.form = parse_form("pf.form", v); },
                 [](const RunConfig& c) { return form_name(c.pf.form); }});
    f.push_back(integer("pf.degree", MP_ACCESS(pf.degree)));
    f.push_back({"pf.weighting",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "identity") {
                     c.pf.weighting = GmmWeighting::Identity;
                   } else if (v == "two-step") {
                     c.pf.weighting = GmmWeighting::TwoStep;
                   } else {
                     bad_value("pf.weighting", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.pf.weighting == GmmWeighting::Identity ? "identity" : "two-step");
                 }});
    f.push_back(boolean("pf.price_instruments", MP_ACCESS(pf.price_instruments)));
    f.push_back(boolean("pf.year_effects", MP_ACCESS(pf.year_effects)));
    f.push_back(integer("pf.perturbed_starts", MP_ACCESS(pf.perturbed_starts)));
    f.push_back(real("pf.start_scale", MP_ACCESS(pf.start_scale)));
    f.push_back(real("pf.gradient_tolerance", MP_ACCESS(pf.gradient_tolerance)));
    f.push_back(integer("pf.max_iterations", MP_ACCESS(pf.max_iterations)));
    f.push_back(integer("pf.bootstrap", MP_ACCESS(bootstrap)));

    f.push_back({"decompose.windows",
                 [](RunConfig& c, const std::string& v) {
                   c.windows.clear();
                   if (v == "full") return;
                   for (const std::string& w : split_list(v)) {
                     const auto dash = w.find('-', 1);
                     if (dash == std::string::npos) bad_value("decompose.windows", v);
                     c.windows.emplace_back(static_cast<int>(parse_int("decompose.windows", w.substr(0, dash))),
                                            static_cast<int>(parse_int("decompose.windows", w.substr(dash + 1))));
                   }
                 },
                 [](const RunConfig& c) {
                   if (c.windows.empty()) return std::string("full");
                   std::string out;
                   for (std::size_t i = 0; i < c.windows.size(); ++i) {
                     out += (i ? "," : "") + std::to_string(c.windows[i].first) + "-" +
                            std::to_string(c.windows[i].second);
                   }
                   return out;
                 }});
    f.push_back(integer("montecarlo.reps", MP_ACCESS(reps)));
    return f;
  }();
  return table;
}

#undef MP_ACCESS

struct ParamField {
  const char* name;
  double ModelParams::*member;
};

constexpr ParamField kParamFields[] = {
    {"alpha_x", &ModelParams::alpha_x},     {"alpha_y", &ModelParams::alpha_y},
    {"alpha_l", &ModelParams::alpha_l},     {"alpha_k", &ModelParams::alpha_k},
    {"theta", &ModelParams::theta},         {"sigma", &ModelParams::sigma},
    {"lambda_x", &ModelParams::lambda_x},   {"lambda_y", &ModelParams::lambda_y},
    {"x_min", &ModelParams::x_min},         {"y_min", &ModelParams::y_min},
    {"rho", &ModelParams::rho},             {"rho_x", &ModelParams::rho_x},
    {"sigma_xi", &ModelParams::sigma_xi},   {"sigma_u_x", &ModelParams::sigma_u_x},
    {"sigma_eps", &ModelParams::sigma_eps}, {"beta_0", &ModelParams::beta_0},
    {"beta_x_cd", &ModelParams::beta_x_cd}, {"beta_y_cd", &ModelParams::beta_y_cd},
};

double ModelParams::*param_member(const std::string& key, const std::string& name) {
  for (const ParamField& p : kParamFields) {
    if (name == p.name) return p.member;
  }
  throw Error(ErrorKind::ConfigParse, "unknown key " + key);
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate",    "screen",   "akm",       "quality",    "paretofit",
                                              "estimate-pf", "matcheff", "decompose", "montecarlo", "pipeline"};
  return names;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigParse, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ConfigParse, "line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw Error(ErrorKind::ConfigParse, "line " + std::to_string(lineno) + ": duplicate key " + key);
    }
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingInput, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(RunConfig& cfg, const ConfigMap& values) {
  std::vector<std::pair<std::string, std::string>> shared, per_sector;
  for (const auto& [key, value] : values) {
    if (key.rfind("model.", 0) == 0) {
      const std::string rest = key.substr(6);
      if (rest.find('.') == std::string::npos) {
        shared.emplace_back(key, value);
      } else {
        per_sector.emplace_back(key, value);
      }
      continue;
    }
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw Error(ErrorKind::ConfigParse, "unknown key " + key);
    it->set(cfg, value);
  }
  for (const auto& [key, value] : shared) {
    auto member = param_member(key, key.substr(6));
    const double v = parse_double(key, value);
    for (ModelParams& p : cfg.sim.sector_params) p.*member = v;
  }
  for (const auto& [key, value] : per_sector) {
    // model.s<k>.<name>
    const std::string rest = key.substr(6);
    const auto dot = rest.find('.');
    if (rest.size() < 2 || rest[0] != 's') throw Error(ErrorKind::ConfigParse, "unknown key " + key);
    const long long s = parse_int(key, rest.substr(1, dot - 1));
    if (s < 0 || s >= cfg.sim.n_sectors) throw Error(ErrorKind::ConfigParse, "sector out of range in " + key);
    if (cfg.sim.sector_params.size() == 1 && cfg.sim.n_sectors > 1) {
      cfg.sim.sector_params.assign(static_cast<std::size_t>(cfg.sim.n_sectors), cfg.sim.sector_params.front());
    }
    auto member = param_member(key, rest.substr(dot + 1));
    cfg.sim.sector_params.at(static_cast<std::size_t>(s)).*member = parse_double(key, value);
  }
  cfg.sim.seed = cfg.seed;
}

std::string manifest_text(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const Field& f : fields()) out[f.key] = f.get(cfg);
  if (cfg.sim.sector_params.size() == 1) {
    for (const ParamField& p : kParamFields) {
      out[std::string("model.") + p.name] = format_double(cfg.sim.sector_params.front().*p.member);
    }
  } else {
    for (std::size_t s = 0; s < cfg.sim.sector_params.size(); ++s) {
      for (const ParamField& p : kParamFields) {
        out["model.s" + std::to_string(s) + "." + p.name] = format_double(cfg.sim.sector_params[s].*p.member);
      }
    }
  }
  std::string text;
  for (const auto& [k, v] : out) text += k + " = " + v + "\n";
  return text;
}

}  // namespace matchprod
