#include "gvarfsv/regression.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "gvarfsv/errors.hpp"

namespace gvarfsv {

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.1) return "*";
  return "";
}

namespace {

// Names of the columns that are linear combinations of earlier ones.
std::vector<std::string> collinear_columns(const Eigen::MatrixXd& design, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  Eigen::MatrixXd kept(design.rows(), 0);
  for (Eigen::Index c = 0; c < design.cols(); ++c) {
    Eigen::MatrixXd trial(design.rows(), kept.cols() + 1);
    trial << kept, design.col(c);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (qr.rank() < trial.cols()) {
      out.push_back(names[c]);
    } else {
      kept = trial;
    }
  }
  return out;
}

}  // namespace

RegressionResult ols_regress(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                             const std::vector<std::string>& names) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = x.cols() + 1;
  require(x.rows() == n, "ols_regress: covariate rows differ from response length");
  require(static_cast<Eigen::Index>(names.size()) == x.cols(), "ols_regress: one name per covariate required");
  require(n > p, "ols_regress: need more observations (" + std::to_string(n) + ") than coefficients (" +
                     std::to_string(p) + ")");
  require(y.allFinite() && x.allFinite(), "ols_regress: non-finite input");

  Eigen::MatrixXd design(n, p);
  design.col(0).setOnes();
  design.rightCols(p - 1) = x;
  std::vector<std::string> all_names{"intercept"};
  all_names.insert(all_names.end(), names.begin(), names.end());

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::string list;
    for (const auto& c : collinear_columns(design, all_names)) list += (list.empty() ? "" : ", ") + c;
    throw InputError("ols_regress: rank-deficient design; collinear columns: " + list);
  }
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd resid = y - design * coef;
  const int dof = static_cast<int>(n - p);
  const double sigma2 = resid.squaredNorm() / dof;
  const Eigen::MatrixXd xtx_inv = (design.transpose() * design).inverse();

  RegressionResult out;
  out.observations = static_cast<int>(n);
  out.dof = dof;
  const double tss = (y.array() - y.mean()).square().sum();
  out.r_squared = tss > 0.0 ? 1.0 - resid.squaredNorm() / tss : 1.0;

  boost::math::students_t dist(dof);
  for (Eigen::Index j = 0; j < p; ++j) {
    RegressionTerm t;
    t.name = all_names[j];
    t.coef = coef(j);
    t.std_error = std::sqrt(sigma2 * xtx_inv(j, j));
    if (t.std_error > 0.0) {
      t.t_stat = t.coef / t.std_error;
      t.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t.t_stat)));
    } else {
      // Perfect fit: the coefficient is exact.
      t.t_stat = t.coef == 0.0 ? 0.0 : std::copysign(INFINITY, t.coef);
      t.p_value = t.coef == 0.0 ? 1.0 : 0.0;
    }
    t.stars = significance_stars(t.p_value);
    out.terms.push_back(std::move(t));
  }
  return out;
}

}  // namespace gvarfsv
