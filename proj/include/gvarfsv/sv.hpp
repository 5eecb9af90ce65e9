#pragma once

#include <array>

#include <Eigen/Dense>

#include "gvarfsv/priors.hpp"
#include "gvarfsv/random.hpp"

// Factor and stochastic-volatility blocks of the Gibbs sampler.
namespace gvarfsv {

/// AR(1) log-variance process h_t = level + persistence (h_{t-1} - level) + sqrt(innovation_var) xi_t.
struct SvParams {
  double level = 0.0;
  double persistence = 0.5;
  double innovation_var = 0.1;

  bool valid() const noexcept;
  bool operator==(const SvParams&) const = default;
};

// Ten-component normal mixture approximating log chi^2_1 (Omori, Chib,
// Shephard and Nakajima, 2007).
struct LogChiSquareMixture {
  static constexpr int kComponents = 10;
  static constexpr std::array<double, kComponents> weight = {0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                                             0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
  static constexpr std::array<double, kComponents> mean = {1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                                           -1.97278, -3.46788, -5.55246, -8.68384, -14.65};
  static constexpr std::array<double, kComponents> variance = {0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                                                               0.98583, 1.57469, 2.54498, 4.16591, 7.33342};
};

// Offset in log(e^2 + c) that keeps exact zeros finite.
inline constexpr double kLogSquareOffset = 1e-10;

struct FactorConditional {
  Eigen::VectorXd mean;        // f_bar_t
  Eigen::MatrixXd covariance;  // P_t
};

/// Conditional of f_t given eps_t, using Upsilon_t = H_t Lambda' Theta_t^{-1},
/// mean = Upsilon_t eps_t, covariance = H_t - Upsilon_t Theta_t Upsilon_t'.
/// `factor_var` holds the diagonal of H_t (variances, not logs).
FactorConditional factor_conditional(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& factor_var,
                                     const Eigen::MatrixXd& theta, const Eigen::VectorXd& eps);

/// Draws f_t independently for every row of `residuals` (T x L).
Eigen::MatrixXd sample_factors_path(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& log_vol_factors,
                                    const Eigen::MatrixXd& log_vol_idio, const Eigen::MatrixXd& residuals, Rng& rng);

/// Row r of Lambda from the regression of residuals.col(r) on the factors with
/// noise variance exp(log_vol_idio(t, r)) and N(0, loading_var) priors.
Eigen::MatrixXd sample_loadings(const Eigen::MatrixXd& residuals, const Eigen::MatrixXd& factors,
                                const Eigen::MatrixXd& log_vol_idio, const PriorConfig& prior, Rng& rng);

struct SvDraw {
  Eigen::VectorXd path;
  SvParams params;
};

/// One sweep of the auxiliary-mixture sampler for a single series: mixture
/// indicators, forward-filtering backward-sampling of the log-variance path,
/// then the AR(1) parameters in the centered parameterization followed by an
/// interweaving (non-centered) redraw of level and scale.
SvDraw sample_volatility_path(const Eigen::VectorXd& series, const Eigen::VectorXd& current_path,
                              const SvParams& params, const PriorConfig& prior, Rng& rng);

// Building blocks, exposed for testing.
Eigen::VectorXd log_square(const Eigen::VectorXd& series);
Eigen::VectorXi sample_mixture_indicators(const Eigen::VectorXd& log_sq, const Eigen::VectorXd& path, Rng& rng);
/// FFBS draw of the path given indicators and fixed parameters.
Eigen::VectorXd sample_log_vol_path(const Eigen::VectorXd& log_sq, const Eigen::VectorXi& indicators,
                                    const SvParams& params, Rng& rng);

}  // namespace gvarfsv
