#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

// Cross-region OLS of response summaries on regional covariates.
namespace gvarfsv {

struct RegressionTerm {
  std::string name;
  double coef = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  std::string stars;  // "*" p<0.1, "**" p<0.05, "***" p<0.01
};

struct RegressionResult {
  std::vector<RegressionTerm> terms;  // intercept first
  double r_squared = 0.0;
  int observations = 0;
  int dof = 0;
};

/// Least squares with an intercept and classical (homoskedastic) standard
/// errors. `x` holds the covariates without the intercept column. A
/// rank-deficient design throws InputError naming the collinear columns.
RegressionResult ols_regress(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const std::vector<std::string>& names);

std::string significance_stars(double p_value);

}  // namespace gvarfsv
