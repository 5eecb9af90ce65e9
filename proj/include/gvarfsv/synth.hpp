#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/data.hpp"
#include "gvarfsv/model.hpp"
#include "gvarfsv/sv.hpp"

// Synthetic data from known parameters, used for recovery checks and the
// end-to-end CLI path.
namespace gvarfsv {

struct SyntheticTruth {
  ModelDims dims;
  std::vector<RegionCoefficients> regions;
  NationalCoefficients national;
  HierarchyParams hierarchy;
  Eigen::MatrixXd loadings;  // L x F
  std::vector<SvParams> sv_factors;
  std::vector<SvParams> sv_idio;

  // Realized latent paths over the effective sample (T - max(P,Q) rows).
  Eigen::MatrixXd factors;
  Eigen::MatrixXd log_vol_factors;
  Eigen::MatrixXd log_vol_idio;
  Eigen::MatrixXd innovations;  // eps_t, T_eff x L
};

struct TruthOptions {
  double coef_variance = 0.01;   // v_j for every coefficient
  double idio_log_var = -3.0;    // level of the idiosyncratic log-variances
  double loading_scale = 0.15;
  int max_attempts = 200;
};

/// Random hierarchy mean and region draws around it, retried until the
/// stacked system is stable (spectral radius below 0.95).
SyntheticTruth make_truth(const ModelDims& dims, const WeightMatrix& w, std::uint64_t seed,
                          const TruthOptions& options = {});

struct SynthOptions {
  int burn_in = 200;
  bool zero_noise = false;
};

struct SyntheticPanel {
  PanelDataset panel;
  SyntheticTruth truth;
};

/// Simulates the global system forward with factor-SV innovations. Throws
/// InputError when the supplied coefficients are not stable.
SyntheticPanel synth_generate(const SyntheticTruth& truth, const WeightMatrix& w, std::uint64_t seed,
                              const SynthOptions& options = {});

/// Random planar centroids on [0, 10]^2, at least 0.1 apart.
Centroids synth_centroids(int regions, std::uint64_t seed);

struct RegionCovariates {
  std::vector<std::string> regions;
  std::vector<std::string> names;  // agric, constr, manu, dir, bussum, unemp
  Eigen::MatrixXd values;          // regions x names
};

RegionCovariates synth_covariates(const std::vector<std::string>& regions, std::uint64_t seed);

/// Household records with log-normal incomes for each region and year.
std::vector<HouseholdRecord> synth_survey(const std::vector<std::string>& regions, int first_year, int last_year,
                                          int households_per_year, std::uint64_t seed);

std::vector<std::string> synth_region_names(int regions);

}  // namespace gvarfsv
