#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvarfsv/config.hpp"
#include "gvarfsv/data.hpp"
#include "gvarfsv/synth.hpp"

// Subcommands of the gvarfsv tool. Each reads its inputs, writes artifacts
// into the output directory and finishes with <command>_manifest.json.
namespace gvarfsv {

inline const std::vector<std::string> kCommands = {"simulate", "estimate", "irf", "fevd",
                                                   "classify", "gini",     "regress"};

/// Runs one subcommand. Throws the gvarfsv error types on failure.
void run_command(const std::string& command, const RunConfig& config);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);
std::string file_hash(const std::string& path);

// Artifact writers shared with the tests.
void write_panel_csv(const std::string& path, const PanelDataset& panel, const std::string& national_label);
void write_centroids_csv(const std::string& path, const Centroids& c);
void write_covariates_csv(const std::string& path, const RegionCovariates& c);
void write_survey_csv(const std::string& path, const std::vector<HouseholdRecord>& records);
void write_truth_json(const std::string& path, const SyntheticTruth& truth, std::uint64_t seed);

/// Reads the covariate table: column `region` plus the requested names, in
/// the order of `regions`.
Eigen::MatrixXd read_covariates_csv(const std::string& path, const std::vector<std::string>& regions,
                                    const std::vector<std::string>& names, bool permissive);

}  // namespace gvarfsv
