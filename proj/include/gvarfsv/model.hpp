#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/array3.hpp"

// Model equations and dimension bookkeeping for the multi-region VARX with a
// national block and factor stochastic volatility errors.
//
//   y_it = theta_i + sum_p A_ip y_{i,t-p} + sum_q B_iq ystar_{i,t-q} + C_i z_{t-1} + e_it
//   z_t  = sum_p D_p z_{t-p} + sum_q S_q zstar_{t-q} + u_t
//
// with ystar_it = sum_j w_ij y_jt and zstar_t the plain cross-region average.
namespace gvarfsv {

struct ModelDims {
  int regions = 1;           // N
  int vars_per_region = 1;   // k
  int national_vars = 1;     // ell
  int domestic_lags = 1;     // P
  int foreign_lags = 1;      // Q
  int factors = 0;           // F
  int periods = 2;           // T

  int max_lag() const noexcept { return std::max(domestic_lags, foreign_lags); }
  // Regressors in one region equation: intercept, P*k own lags, Q*k foreign lags, ell national.
  int region_regressors() const noexcept {
    return 1 + domestic_lags * vars_per_region + foreign_lags * vars_per_region + national_vars;
  }
  // M = k (1 + P k + Q k + ell).
  int coefs_per_region() const noexcept { return vars_per_region * region_regressors(); }
  // L = k N + ell.
  int shock_dim() const noexcept { return vars_per_region * regions + national_vars; }
  int effective_periods() const noexcept { return periods - max_lag(); }
  // Position of region variable (i, j) in the stacked shock / state vector.
  int global_index(int region, int var) const noexcept {
    return national_vars + region * vars_per_region + var;
  }

  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

class WeightMatrix {
 public:
  WeightMatrix() = default;
  // Validates row-stochasticity (1e-12), nonnegativity and the zero diagonal.
  // A 1x1 matrix must be [0]: the single-region case has no foreign block.
  explicit WeightMatrix(Eigen::MatrixXd w);

  static WeightMatrix single_region();

  const Eigen::MatrixXd& matrix() const noexcept { return w_; }
  int size() const noexcept { return static_cast<int>(w_.rows()); }
  double operator()(int i, int j) const { return w_(i, j); }

 private:
  Eigen::MatrixXd w_;
};

struct PanelDataset {
  Array3 regional;             // T x N x k
  Eigen::MatrixXd national;    // T x ell; column 0 is the uncertainty index
  std::vector<std::string> region_names;
  std::vector<std::string> region_variables;
  std::vector<std::string> national_variables;
  std::vector<std::string> periods;
  std::vector<std::string> transform_log;

  int periods_count() const noexcept { return regional.dim0(); }
  int region_count() const noexcept { return regional.dim1(); }
  int vars_per_region() const noexcept { return regional.dim2(); }
  int national_count() const noexcept { return static_cast<int>(national.cols()); }

  // Checks shapes, label counts and finiteness.
  void validate() const;
};

/// Coefficients of one region equation block. `pack` flattens the k x K
/// matrix [theta, A_1..A_P, B_1..B_Q, C] column-major, so entry (j, c) sits at
/// c * k + j and equation j uses indices j, j + k, j + 2k, ...
struct RegionCoefficients {
  Eigen::VectorXd intercept;             // k
  std::vector<Eigen::MatrixXd> domestic; // P of k x k
  std::vector<Eigen::MatrixXd> foreign;  // Q of k x k
  Eigen::MatrixXd national;              // k x ell

  static RegionCoefficients zeros(const ModelDims& dims);
  static RegionCoefficients from_matrix(const Eigen::MatrixXd& coef, int domestic_lags, int foreign_lags,
                                        int national_vars);
  static RegionCoefficients unpack(const Eigen::VectorXd& beta, const ModelDims& dims);

  // k x (1 + Pk + Qk + ell), columns matching the region design matrix.
  Eigen::MatrixXd as_matrix() const;
  Eigen::VectorXd pack() const;

  int vars() const noexcept { return static_cast<int>(intercept.size()); }
};

struct NationalCoefficients {
  std::vector<Eigen::MatrixXd> own;    // P of ell x ell (D_p)
  std::vector<Eigen::MatrixXd> cross;  // Q of ell x k (S_q)
  Eigen::VectorXd intercept;           // ell; stays zero unless has_intercept
  bool has_intercept = false;          // the national block carries no intercept by default

  static NationalCoefficients zeros(const ModelDims& dims, bool with_intercept = false);
  // Columns: [D_1..D_P, S_1..S_Q, (intercept)], matching the national design matrix.
  static NationalCoefficients from_matrix(const Eigen::MatrixXd& coef, int domestic_lags, int foreign_lags,
                                          int vars_per_region, bool with_intercept);
  Eigen::MatrixXd as_matrix() const;
  Eigen::VectorXd pack() const;

  int vars() const noexcept { return static_cast<int>(intercept.size()); }
};

struct HierarchyParams {
  Eigen::VectorXd mean;      // mu
  Eigen::VectorXd variance;  // diagonal of V, all > 0
};

/// The region and national blocks stacked into one VAR in
/// x_t = (z_t, y_1t, ..., y_Nt): x_t = c + sum_m G_m x_{t-m} + e_t.
struct GlobalSystem {
  std::vector<Eigen::MatrixXd> transitions;  // max(P, Q) square matrices
  Eigen::VectorXd intercept;

  int dim() const noexcept { return static_cast<int>(intercept.size()); }
  int order() const noexcept { return static_cast<int>(transitions.size()); }
  Eigen::MatrixXd companion() const;
};

Array3 compute_foreign_averages(const Array3& regional, const WeightMatrix& w);

Eigen::MatrixXd compute_national_cross_averages(const Array3& regional);

/// (T - max(P,Q)) x k residuals of region `region`; row r corresponds to
/// period max(P,Q) + r.
Eigen::MatrixXd region_residuals(const PanelDataset& data, const WeightMatrix& w,
                                 const RegionCoefficients& coeffs, int region);

Eigen::MatrixXd national_residuals(const PanelDataset& data, const NationalCoefficients& coeffs);

/// Theta_t = Lambda diag(exp h_t) Lambda' + diag(exp omega_t).
Eigen::MatrixXd assemble_theta(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& log_vol_factors,
                               const Eigen::VectorXd& log_vol_idio);

GlobalSystem stack_global_system(const WeightMatrix& w, const std::vector<RegionCoefficients>& regions,
                                 const NationalCoefficients& national, const ModelDims& dims);

// Regression layouts shared by residual evaluation and the sampler.

/// Rows t = max_lag .. T-1 of [1, y_{i,t-1..t-P}, ystar_{i,t-1..t-Q}, z_{t-1}].
Eigen::MatrixXd region_design(const PanelDataset& data, const Array3& foreign, int region, int domestic_lags,
                              int foreign_lags, int max_lag);

/// Rows t = max_lag .. T-1 of [z_{t-1..t-P}, zstar_{t-1..t-Q}, (1)].
Eigen::MatrixXd national_design(const PanelDataset& data, const Eigen::MatrixXd& cross_avg, int domestic_lags,
                                int foreign_lags, int max_lag, bool with_intercept);

}  // namespace gvarfsv
