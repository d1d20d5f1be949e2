#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "matchprod/error.hpp"
#include "matchprod/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string seed;
  std::string out;
  std::string input;
  std::string sectors;
  std::string bootstrap;
  std::string degree;
  std::string threshold;
  std::string reps;
  std::string form;
  std::string input_file;
  bool log_values = false;
  bool year_dummies = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "key = value configuration file");
  sub->add_option("--seed", o.seed, "run seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--input", o.input, "input directory (defaults to --out)");
  sub->add_option("--sectors", o.sectors, "comma-separated sector ids, or all");
  sub->add_option("--bootstrap", o.bootstrap, "bootstrap replications for standard errors");
  sub->add_option("--degree", o.degree, "stage-1 polynomial degree");
  sub->add_option("--threshold", o.threshold, "Pareto fit threshold on the log value");
  sub->add_option("--reps", o.reps, "Monte Carlo replications");
}

const std::map<std::string, std::string> kDescriptions = {
    {"simulate", "simulate firm and worker panels (firms.csv, matches.csv)"},
    {"screen", "apply the sample screens to matches.csv"},
    {"akm", "two-way fixed-effects earnings regression on the largest connected set"},
    {"quality", "firm top and non-top worker quality from the AKM worker effects"},
    {"paretofit", "rank-regression tail exponents of firm quality"},
    {"estimate-pf", "two-stage production-function estimation and TFP"},
    {"matcheff", "match-efficiency residuals and the slope check"},
    {"decompose", "aggregate productivity growth and dispersion decompositions"},
    {"montecarlo", "parameter recovery on repeated simulated panels"},
    {"pipeline", "run every stage from simulation to decomposition"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Assortative-matching production model: simulation and estimation pipeline"};
  app.require_subcommand(1);
  Overrides o;
  for (const std::string& name : matchprod::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, kDescriptions.count(name) ? kDescriptions.at(name) : "");
    add_common(sub, o);
    if (name == "estimate-pf" || name == "pipeline") {
      sub->add_option("--form", o.form, "production form")->check(CLI::IsMember({"ces", "cd"}));
    }
    if (name == "paretofit") {
      sub->add_option("--file", o.input_file, "one-column value file (header row) instead of firm quality");
      sub->add_flag("--log-values", o.log_values, "values in the file are logs");
      sub->add_flag("--year-dummies", o.year_dummies, "pooled fit with year dummies");
    }
  }
  CLI11_PARSE(app, argc, argv);

  matchprod::RunConfig cfg;
  try {
    matchprod::ConfigMap values;
    if (!o.config.empty()) values = matchprod::read_config_file(o.config);
    // Flags override the file.
    auto set = [&](const char* key, const std::string& v) {
      if (!v.empty()) values[key] = v;
    };
    set("run.seed", o.seed);
    set("run.out", o.out);
    set("run.input", o.input);
    set("run.sectors", o.sectors);
    set("pf.bootstrap", o.bootstrap);
    set("pf.degree", o.degree);
    set("pareto.threshold", o.threshold);
    set("montecarlo.reps", o.reps);
    set("pf.form", o.form);
    set("run.input_file", o.input_file);
    if (o.log_values) values["pareto.log_values"] = "true";
    if (o.year_dummies) values["pareto.year_dummies"] = "true";
    values["run.subcommand"] = app.get_subcommands().front()->get_name();
    matchprod::apply_config(cfg, values);
  } catch (const matchprod::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    matchprod::run(cfg);
  } catch (const matchprod::StageFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
