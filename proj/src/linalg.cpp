#include "gvarfsv/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "gvarfsv/errors.hpp"

namespace gvarfsv {

Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& a, const std::string& what) {
  if (!a.allFinite()) {
    throw NumericalError(what + ": matrix has non-finite entries");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;

  const double n = static_cast<double>(a.rows());
  const double jitter = kJitterScale * std::abs(a.trace()) / std::max(n, 1.0);
  Eigen::MatrixXd jittered = a;
  jittered.diagonal().array() += jitter;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(what + ": matrix is not positive definite even after jitter");
  }
  return llt;
}

Eigen::MatrixXd GaussianConditional::covariance() const {
  const Eigen::Index n = mean.size();
  Eigen::MatrixXd linv = precision_factor.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  return linv.transpose() * linv;
}

Eigen::VectorXd GaussianConditional::draw(Rng& rng) const {
  Eigen::VectorXd z = rng.normal_vector(mean.size());
  // x = mean + L'^{-1} z has covariance (L L')^{-1}.
  return mean + precision_factor.transpose().triangularView<Eigen::Upper>().solve(z);
}

GaussianConditional regression_conditional(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                                           const Eigen::VectorXd& noise_var, const Eigen::VectorXd& prior_mean,
                                           const Eigen::VectorXd& prior_var, const std::string& what) {
  const Eigen::Index p = design.cols();
  require(design.rows() == target.size() && target.size() == noise_var.size(),
          what + ": design/target/noise length mismatch");
  require(prior_mean.size() == p && prior_var.size() == p, what + ": prior length mismatch");

  const Eigen::VectorXd noise_prec = noise_var.cwiseInverse();
  Eigen::MatrixXd precision = design.transpose() * noise_prec.asDiagonal() * design;
  precision.diagonal() += prior_var.cwiseInverse();
  const Eigen::VectorXd rhs =
      design.transpose() * noise_prec.cwiseProduct(target) + prior_mean.cwiseQuotient(prior_var);

  auto llt = robust_llt(precision, what + " posterior precision");
  GaussianConditional out;
  out.mean = llt.solve(rhs);
  out.precision_factor = llt.matrixL();
  if (!out.mean.allFinite()) {
    throw NumericalError(what + ": non-finite posterior mean");
  }
  return out;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace gvarfsv
