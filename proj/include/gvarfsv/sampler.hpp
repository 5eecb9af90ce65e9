#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/linalg.hpp"
#include "gvarfsv/model.hpp"
#include "gvarfsv/priors.hpp"
#include "gvarfsv/random.hpp"
#include "gvarfsv/sv.hpp"

// Gibbs sampler for the hierarchical multi-region model.
namespace gvarfsv {

/// One full draw of every model quantity. Latent paths cover the effective
/// sample (periods max(P,Q) .. T-1), so they have T - max(P,Q) rows.
struct ParameterState {
  std::vector<RegionCoefficients> regions;
  NationalCoefficients national;
  HierarchyParams hierarchy;
  Eigen::MatrixXd loadings;         // L x F
  Eigen::MatrixXd factors;          // T_eff x F
  Eigen::MatrixXd log_vol_factors;  // T_eff x F
  Eigen::MatrixXd log_vol_idio;     // T_eff x L
  std::vector<SvParams> sv_factors; // F
  std::vector<SvParams> sv_idio;    // L

  // L x T_eff common component Lambda f_t, transposed to T_eff x L.
  Eigen::MatrixXd common_component() const;
  bool all_finite() const;
};

/// Data with everything the sampler needs precomputed: foreign averages,
/// cross averages and the per-region / national design matrices.
struct EstimationData {
  PanelDataset panel;
  WeightMatrix weights;
  ModelDims dims;
  bool national_intercept = false;

  std::vector<Eigen::MatrixXd> region_x;  // N of T_eff x K
  std::vector<Eigen::MatrixXd> region_y;  // N of T_eff x k
  Eigen::MatrixXd national_x;             // T_eff x (P ell + Q k [+1])
  Eigen::MatrixXd national_y;             // T_eff x ell

  static EstimationData build(PanelDataset panel, WeightMatrix weights, int domestic_lags, int foreign_lags,
                              int factors, bool national_intercept);

  /// Stacked residuals eps_t = (u_t, e_1t, ..., e_Nt), T_eff x L.
  Eigen::MatrixXd residuals(const ParameterState& state) const;
};

RegionCoefficients sample_region_coeffs(const ParameterState& state, const EstimationData& data, int region,
                                        Rng& rng);

/// The Gaussian conditional of region equation `eq` (coefficients in
/// regressor order), exposed for testing and used by sample_region_coeffs.
GaussianConditional region_equation_conditional(const ParameterState& state, const EstimationData& data, int region,
                                                int eq);

Eigen::VectorXd sample_common_mean(const std::vector<Eigen::VectorXd>& betas, const Eigen::VectorXd& variances,
                                   const PriorConfig& prior, Rng& rng);

Eigen::VectorXd sample_common_variances(const std::vector<Eigen::VectorXd>& betas, const Eigen::VectorXd& mean,
                                        const PriorConfig& prior, Rng& rng);

NationalCoefficients sample_national_coeffs(const ParameterState& state, const EstimationData& data,
                                            const PriorConfig& prior, Rng& rng);

GaussianConditional national_equation_conditional(const ParameterState& state, const EstimationData& data,
                                                  const PriorConfig& prior, int eq);

struct StoredDraw {
  int iteration = 0;
  ParameterState state;
  // Time averages of exp(h_t) and exp(omega_t); always kept, even when paths are not.
  Eigen::VectorXd mean_factor_var;
  Eigen::VectorXd mean_idio_var;
};

struct PosteriorStore {
  ModelDims dims;
  PriorConfig prior;
  SamplerConfig sampler;
  std::vector<std::string> region_names;
  std::vector<std::string> region_variables;
  std::vector<std::string> national_variables;
  std::vector<std::string> periods;  // full-sample period labels
  std::vector<StoredDraw> draws;
};

/// Starting values: ridge-stabilized OLS coefficients, principal-component
/// factors and constant log-variance paths at the residual variances.
ParameterState initial_state(const EstimationData& data);

// Called after every iteration with the 0-based iteration index.
using ProgressCallback = std::function<void(int)>;

PosteriorStore run_gibbs(const PanelDataset& data, const WeightMatrix& w, const ModelDims& dims,
                         const PriorConfig& prior, const SamplerConfig& config,
                         const ProgressCallback& progress = {});

// Substream tags for the sampler steps.
enum class GibbsStep : std::uint64_t {
  kRegionCoefficients = 1,
  kHierarchyVariances = 2,
  kCommonMean = 3,
  kNationalCoefficients = 4,
  kLoadings = 5,
  kFactors = 6,
  kVolatilities = 7,
};

}  // namespace gvarfsv
