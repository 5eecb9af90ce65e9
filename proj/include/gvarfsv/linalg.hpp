#pragma once

#include <string>

#include <Eigen/Dense>

#include "gvarfsv/random.hpp"

namespace gvarfsv {

// Relative jitter added to the diagonal when a factorization fails.
inline constexpr double kJitterScale = 1e-8;

/// Cholesky factorization of a symmetric matrix. On failure retries once
/// with kJitterScale * trace / dim added to the diagonal, then throws
/// NumericalError mentioning `what`.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& a, const std::string& what);

// Gaussian N(mean, precision^-1) held through the Cholesky factor of the
// precision.
struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::MatrixXd precision_factor;  // lower triangular, precision = L L'

  Eigen::MatrixXd covariance() const;
  Eigen::VectorXd draw(Rng& rng) const;
};

/// Conditional posterior of the coefficients of y = X b + e,
/// e_t ~ N(0, noise_var_t), under the independent prior
/// b_j ~ N(prior_mean_j, prior_var_j).
GaussianConditional regression_conditional(const Eigen::MatrixXd& design,
                                           const Eigen::VectorXd& target,
                                           const Eigen::VectorXd& noise_var,
                                           const Eigen::VectorXd& prior_mean,
                                           const Eigen::VectorXd& prior_var,
                                           const std::string& what);

double spectral_radius(const Eigen::MatrixXd& a);

}  // namespace gvarfsv
