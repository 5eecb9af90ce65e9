#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/array3.hpp"
#include "gvarfsv/model.hpp"
#include "gvarfsv/random.hpp"

namespace testing {

// Independent source of test inputs; deliberately not gvarfsv::Rng.
class TestRandom {
 public:
  explicit TestRandom(unsigned seed) : engine_(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Eigen::MatrixXd matrix(int rows, int cols, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = scale * normal();
    return m;
  }
  Eigen::VectorXd vector(int n, double scale = 1.0) { return matrix(n, 1, scale); }

  gvarfsv::Array3 array(int d0, int d1, int d2) {
    gvarfsv::Array3 a(d0, d1, d2);
    for (int i = 0; i < d0; ++i)
      for (int j = 0; j < d1; ++j)
        for (int k = 0; k < d2; ++k) a(i, j, k) = normal();
    return a;
  }

  // Symmetric positive definite with eigenvalues bounded away from zero.
  Eigen::MatrixXd spd(int n) {
    const Eigen::MatrixXd a = matrix(n, n);
    return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  }

  gvarfsv::WeightMatrix weights(int n) {
    if (n == 1) return gvarfsv::WeightMatrix::single_region();
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) w(i, j) = i == j ? 0.0 : uniform(0.1, 1.0);
      w.row(i) /= w.row(i).sum();
    }
    return gvarfsv::WeightMatrix(w);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline gvarfsv::ModelDims dims(int n, int k, int ell, int p, int q, int f, int t) {
  gvarfsv::ModelDims d;
  d.regions = n;
  d.vars_per_region = k;
  d.national_vars = ell;
  d.domestic_lags = p;
  d.foreign_lags = q;
  d.factors = f;
  d.periods = t;
  return d;
}

// Running first and second moments of vector draws.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int dim) : sum_(Eigen::VectorXd::Zero(dim)), outer_(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const Eigen::VectorXd& x) {
    sum_ += x;
    outer_ += x * x.transpose();
    ++n_;
  }
  Eigen::VectorXd mean() const { return sum_ / n_; }
  Eigen::MatrixXd covariance() const {
    const Eigen::VectorXd m = mean();
    return (outer_ - n_ * m * m.transpose()) / (n_ - 1);
  }
  int count() const { return n_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::MatrixXd outer_;
  int n_ = 0;
};

struct MomentCheck {
  bool ok = true;
  double worst_z = 0.0;
  std::string detail;
};

// Compares sample moments with Gaussian targets: each mean within `z` standard
// errors sqrt(S_ii / n), each covariance entry within `z` standard errors
// sqrt((S_ii S_jj + S_ij^2) / n).
inline MomentCheck check_gaussian_moments(const MomentAccumulator& acc, const Eigen::VectorXd& mean,
                                          const Eigen::MatrixXd& cov, double z = 3.0) {
  MomentCheck out;
  const double n = acc.count();
  const Eigen::VectorXd m = acc.mean();
  const Eigen::MatrixXd s = acc.covariance();
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double se = std::sqrt(cov(i, i) / n);
    const double zi = std::abs(m(i) - mean(i)) / se;
    if (zi > out.worst_z) out.worst_z = zi;
    if (zi > z) {
      out.ok = false;
      out.detail += "mean[" + std::to_string(i) + "] z=" + std::to_string(zi) + " ";
    }
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double se_c = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n);
      const double zc = std::abs(s(i, j) - cov(i, j)) / se_c;
      if (zc > out.worst_z) out.worst_z = zc;
      if (zc > z) {
        out.ok = false;
        out.detail += "cov[" + std::to_string(i) + "," + std::to_string(j) + "] z=" + std::to_string(zc) + " ";
      }
    }
  }
  return out;
}

// Rng whose normal draws are always zero (uniforms and gammas unchanged).
class ZeroNormalRng : public gvarfsv::Rng {
 public:
  ZeroNormalRng() : gvarfsv::Rng(0) {}
  double normal() override { return 0.0; }
};

// Dense Gaussian regression posterior with diagonal noise and prior
// variances, computed by explicit inversion.
struct DensePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline DensePosterior dense_regression_posterior(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                 const Eigen::VectorXd& noise_var, const Eigen::VectorXd& prior_mean,
                                                 const Eigen::VectorXd& prior_var) {
  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    precision += x.row(t).transpose() * x.row(t) / noise_var(t);
    rhs += x.row(t).transpose() * y(t) / noise_var(t);
  }
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    precision(c, c) += 1.0 / prior_var(c);
    rhs(c) += prior_mean(c) / prior_var(c);
  }
  DensePosterior p;
  p.cov = precision.inverse();
  p.mean = p.cov * rhs;
  return p;
}

}  // namespace testing
