#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gvarfsv/data.hpp"
#include "gvarfsv/priors.hpp"
#include "gvarfsv/structural.hpp"

// Run configuration for the command-line tool.
namespace gvarfsv {

struct DataConfig {
  // Empty paths default to the artifacts `simulate` writes into the output directory.
  std::string panel;
  std::string centroids;
  std::string survey;
  std::string covariates;
  std::string national_label = "national";
  bool permissive = false;
  std::vector<std::string> region_variables;    // empty: taken from the panel file
  std::vector<std::string> national_variables;  // first entry must be the uncertainty index
  TransformSpec transforms;
};

struct ModelConfig {
  // Used by `simulate`; estimation takes N, k, ell and T from the data.
  int regions = 8;
  int vars_per_region = 2;
  int national_vars = 2;
  int periods = 120;
  int domestic_lags = 1;
  int foreign_lags = 1;
  int factors = 1;
};

struct StructuralConfig {
  int horizon = 20;
  std::string covariance = "time_average";  // or "date"
  std::string date;                         // "YYYYQn" when covariance == "date"
  bool rescale_impact = false;
  double upper_frac = 0.2;
  double lower_frac = 0.2;
  std::string response_variable;            // region variable to classify; default: first
};

struct RegressionConfig {
  int horizon = 4;  // -1: use the peak response
  std::vector<std::string> covariates = {"agric", "constr", "manu", "dir", "bussum"};
};

struct SimulateConfig {
  std::uint64_t seed = 1;
  bool zero_noise = false;
  int survey_first_year = 1990;
  int survey_households = 200;
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  PriorConfig prior;
  SamplerConfig sampler;
  StructuralConfig structural;
  RegressionConfig regression;
  SimulateConfig simulate;
  std::string output_dir = "out";

  /// Resolves a data path: absolute or config-relative when set, otherwise
  /// `fallback` inside the output directory.
  std::string resolve(const std::string& configured, const std::string& fallback) const;
  std::string base_dir;  // directory of the config file, for relative paths
};

/// Parses and validates; unknown keys and all invalid values are reported
/// together in one ConfigError.
RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

/// Command-line / environment overrides. Values set here replace the config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<int> horizon;
};

inline constexpr const char* kEnvPrefix = "GVARFSV_";

/// Reads GVARFSV_SEED, GVARFSV_OUT, GVARFSV_THREADS and GVARFSV_HORIZON.
Overrides overrides_from_env();

/// Applies env first, then flags; re-validates.
void apply_overrides(RunConfig& config, const Overrides& env, const Overrides& flags);

/// Canonical JSON of the effective configuration, used for manifests and hashing.
std::string canonical_config_json(const RunConfig& config);

}  // namespace gvarfsv
