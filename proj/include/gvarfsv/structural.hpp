#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/array3.hpp"
#include "gvarfsv/model.hpp"
#include "gvarfsv/sampler.hpp"

// Recursive (Cholesky) identification and the structural summaries built on it.
namespace gvarfsv {

/// Lower-triangular factor of the covariance after reordering the variables.
/// Column s of `lower` is the impact of orthogonal shock s, in the permuted
/// coordinates; `impact()` maps the columns back to the natural ordering.
struct CholeskyIdentification {
  Eigen::MatrixXd lower;
  std::vector<int> ordering;  // ordering[pos] = natural index of the variable at position pos

  Eigen::MatrixXd impact() const;
  Eigen::VectorXd impact_column(int position) const { return impact().col(position); }
};

/// Throws NumericalError naming the first failing leading minor when the
/// (jittered) permuted matrix is not positive definite. An empty ordering is
/// the identity.
CholeskyIdentification identify_cholesky(const Eigen::MatrixXd& theta, const std::vector<int>& ordering = {});

struct ImpulseResponse {
  Eigen::MatrixXd response;  // (H+1) x L
  double spectral_radius = 0.0;
  bool explosive = false;    // spectral radius above kExplosiveRadius
};

inline constexpr double kExplosiveRadius = 1.2;

/// Responses at horizons 0..H: response[0] = impact, response[h] from the
/// lag recursion of the global system. Intercepts do not enter.
ImpulseResponse impulse_response(const GlobalSystem& system, const Eigen::VectorXd& impact, int horizon);

/// Orthogonalized forecast-error-variance shares: out(v, s, h) is the share of
/// variable v's (h+1)-step forecast-error variance due to shock s.
Array3 fevd(const GlobalSystem& system, const Eigen::MatrixXd& impact, int horizon);

struct QuantileSummary {
  Eigen::MatrixXd q16;  // rows: variable, cols: horizon
  Eigen::MatrixXd q50;
  Eigen::MatrixXd q84;
};

/// Linear-interpolation quantile (type 7): position q (n - 1) in the sorted sample.
double quantile_linear(std::vector<double> values, double q);

/// Per (variable, horizon) quantiles across the draws of a draws x L x (H+1) array.
QuantileSummary summarize_posterior(const Array3& draws);

enum class ResponseClass { kPositive, kSlightlyPositive, kSlightlyNegative, kNegative, kInsignificant };

std::string to_string(ResponseClass c);

struct RegionBand {
  Eigen::VectorXd q16;
  Eigen::VectorXd q50;
  Eigen::VectorXd q84;
};

struct Classification {
  double peak_value = 0.0;
  int peak_horizon = 0;
  ResponseClass cls = ResponseClass::kInsignificant;
};

struct ClassificationThresholds {
  double upper = 0.0;
  double lower = 0.0;
};

/// Peak = median response with the largest magnitude (earliest horizon on
/// ties). A region is insignificant if its 16-84 band covers zero at the peak
/// horizon. Thresholds are the (1 - upper_frac) and lower_frac quantiles of all
/// regions' peaks; significant peaks beyond them are Positive / Negative, the
/// others Slightly positive / Slightly negative by sign.
std::vector<Classification> peak_and_classify(const std::vector<RegionBand>& bands, double upper_frac = 0.2,
                                              double lower_frac = 0.2, ClassificationThresholds* thresholds = nullptr);

enum class CovarianceChoice { kTimeAverage, kDate };

struct StructuralOptions {
  int horizon = 20;
  CovarianceChoice covariance = CovarianceChoice::kTimeAverage;
  int date_index = 0;                  // effective-sample row when covariance == kDate
  std::vector<int> ordering;           // empty: natural order (uncertainty index first)
  bool rescale_impact = false;         // unit impact on the shocked variable
  int threads = 1;
};

struct StructuralResult {
  Array3 irf;        // draws x L x (H+1), responses to the uncertainty shock
  Array3 fevd;       // draws x L x (H+1), share due to the uncertainty shock
  Array3 fevd_mean;  // L x L x (H+1), posterior mean over draws, all shocks
  QuantileSummary irf_quantiles;
  QuantileSummary fevd_quantiles;
  int explosive_draws = 0;
};

/// Covariance used for identification in one draw: time-averaged variances
/// by default, or Theta_t at options.date_index.
Eigen::MatrixXd draw_covariance(const StoredDraw& draw, const StructuralOptions& options);

StructuralResult compute_structural(const PosteriorStore& store, const WeightMatrix& w,
                                    const StructuralOptions& options);

}  // namespace gvarfsv
