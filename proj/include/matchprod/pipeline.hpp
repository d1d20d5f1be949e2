#pragma once

// Run configuration (flat key=value text with section prefixes) and the
// file-based stages: simulate, screen, akm, quality, paretofit, estimate-pf,
// matcheff, decompose, montecarlo and pipeline.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "matchprod/akm.hpp"
#include "matchprod/error.hpp"
#include "matchprod/prodfn.hpp"
#include "matchprod/synthgen.hpp"

namespace matchprod {

struct RunConfig {
  std::string subcommand = "pipeline";
  std::filesystem::path out_dir = "out";
  std::filesystem::path input_dir;   // empty means out_dir
  std::filesystem::path input_file;  // one-column file for paretofit
  std::uint64_t seed = 20031015;
  std::vector<int> sectors;          // empty means all

  SimConfig sim;
  ScreenConfig screen;
  AkmSpec akm;
  double tie_ratio = 0.995;
  double pareto_threshold = -std::numeric_limits<double>::infinity();
  bool pareto_year_dummies = false;
  bool log_values = false;
  PfOptions pf;
  int bootstrap = 0;
  std::vector<std::pair<int, int>> windows;  // empty means the full sample window
  int reps = 20;

  std::filesystem::path input() const { return input_dir.empty() ? out_dir : input_dir; }
};

using ConfigMap = std::map<std::string, std::string>;

// Lines are `key = value`; blank lines and `#` comments are skipped. Throws
// ConfigParse on malformed or duplicate keys.
ConfigMap parse_config_text(const std::string& text);
// Throws ConfigParse on unknown keys or unparsable values.
void apply_config(RunConfig& cfg, const ConfigMap& values);
// Throws MissingInput when the file cannot be read.
ConfigMap read_config_file(const std::filesystem::path& path);

// Every resolved setting as config text, sorted by key. Parsing it back
// reproduces the configuration.
std::string manifest_text(const RunConfig& cfg);

const std::vector<std::string>& subcommands();

// Failure of a stage, tagged with the stage name.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, const Error& e)
      : std::runtime_error("stage " + stage + ": " + e.what()), stage_(std::move(stage)), kind_(e.kind()) {}
  const std::string& stage() const noexcept { return stage_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string stage_;
  ErrorKind kind_;
};

// Runs cfg.subcommand (all stages in order for "pipeline"), writing a
// manifest to the output directory first. Throws StageFailure.
void run(const RunConfig& cfg);

// Individual stages. Each reads its inputs from cfg.input() and writes to
// cfg.out_dir.
void stage_simulate(const RunConfig& cfg);
void stage_screen(const RunConfig& cfg);
void stage_akm(const RunConfig& cfg);
void stage_quality(const RunConfig& cfg);
void stage_paretofit(const RunConfig& cfg);
void stage_estimate_pf(const RunConfig& cfg);
void stage_matcheff(const RunConfig& cfg);
void stage_decompose(const RunConfig& cfg);
void stage_montecarlo(const RunConfig& cfg);

}  // namespace matchprod
