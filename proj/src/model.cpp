#include "gvarfsv/model.hpp"

#include <cmath>
#include <sstream>

#include "gvarfsv/errors.hpp"

namespace gvarfsv {

void ModelDims::validate() const {
  std::vector<std::string> problems;
  if (regions < 1) problems.push_back("regions must be >= 1");
  if (vars_per_region < 1) problems.push_back("vars_per_region must be >= 1");
  if (national_vars < 1) problems.push_back("national_vars must be >= 1");
  if (domestic_lags < 1) problems.push_back("domestic_lags must be >= 1");
  if (foreign_lags < 1) problems.push_back("foreign_lags must be >= 1");
  if (factors < 0) problems.push_back("factors must be >= 0");
  if (periods <= max_lag()) problems.push_back("periods must exceed max(domestic_lags, foreign_lags)");
  if (factors > shock_dim()) problems.push_back("factors must not exceed the shock dimension");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

WeightMatrix::WeightMatrix(Eigen::MatrixXd w) : w_(std::move(w)) {
  require(w_.rows() == w_.cols() && w_.rows() >= 1, "weight matrix must be square and non-empty");
  require(w_.allFinite(), "weight matrix has non-finite entries");
  const Eigen::Index n = w_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    require(w_(i, i) == 0.0, "weight matrix diagonal must be exactly zero (row " + std::to_string(i) + ")");
    require((w_.row(i).array() >= 0.0).all(), "weight matrix has negative entries (row " + std::to_string(i) + ")");
    if (n > 1) {
      const double s = w_.row(i).sum();
      require(std::abs(s - 1.0) <= 1e-12, "weight matrix row " + std::to_string(i) + " sums to " +
                                              std::to_string(s) + ", not 1");
    }
  }
}

WeightMatrix WeightMatrix::single_region() { return WeightMatrix(Eigen::MatrixXd::Zero(1, 1)); }

void PanelDataset::validate() const {
  const int t = periods_count();
  require(national.rows() == t, "national block has " + std::to_string(national.rows()) + " periods, regional has " +
                                    std::to_string(t));
  require(national_count() >= 1, "at least one national variable is required");
  require(region_names.empty() || static_cast<int>(region_names.size()) == region_count(),
          "region label count mismatch");
  require(region_variables.empty() || static_cast<int>(region_variables.size()) == vars_per_region(),
          "region variable label count mismatch");
  require(national_variables.empty() || static_cast<int>(national_variables.size()) == national_count(),
          "national variable label count mismatch");
  require(periods.empty() || static_cast<int>(periods.size()) == t, "period label count mismatch");
  require(regional.all_finite(), "regional observations contain non-finite values");
  require(national.allFinite(), "national observations contain non-finite values");
}

RegionCoefficients RegionCoefficients::zeros(const ModelDims& dims) {
  const int k = dims.vars_per_region;
  RegionCoefficients c;
  c.intercept = Eigen::VectorXd::Zero(k);
  c.domestic.assign(dims.domestic_lags, Eigen::MatrixXd::Zero(k, k));
  c.foreign.assign(dims.foreign_lags, Eigen::MatrixXd::Zero(k, k));
  c.national = Eigen::MatrixXd::Zero(k, dims.national_vars);
  return c;
}

RegionCoefficients RegionCoefficients::from_matrix(const Eigen::MatrixXd& coef, int domestic_lags, int foreign_lags,
                                                   int national_vars) {
  const Eigen::Index k = coef.rows();
  require(coef.cols() == 1 + (domestic_lags + foreign_lags) * k + national_vars,
          "region coefficient matrix has the wrong number of columns");
  RegionCoefficients c;
  c.intercept = coef.col(0);
  Eigen::Index col = 1;
  for (int p = 0; p < domestic_lags; ++p, col += k) c.domestic.push_back(coef.middleCols(col, k));
  for (int q = 0; q < foreign_lags; ++q, col += k) c.foreign.push_back(coef.middleCols(col, k));
  c.national = coef.middleCols(col, national_vars);
  return c;
}

RegionCoefficients RegionCoefficients::unpack(const Eigen::VectorXd& beta, const ModelDims& dims) {
  require(beta.size() == dims.coefs_per_region(), "beta vector length does not match dims");
  const Eigen::Map<const Eigen::MatrixXd> coef(beta.data(), dims.vars_per_region, dims.region_regressors());
  return from_matrix(coef, dims.domestic_lags, dims.foreign_lags, dims.national_vars);
}

Eigen::MatrixXd RegionCoefficients::as_matrix() const {
  const Eigen::Index k = intercept.size();
  const Eigen::Index cols =
      1 + static_cast<Eigen::Index>(domestic.size() + foreign.size()) * k + national.cols();
  Eigen::MatrixXd coef(k, cols);
  coef.col(0) = intercept;
  Eigen::Index col = 1;
  for (const auto& a : domestic) {
    require(a.rows() == k && a.cols() == k, "domestic lag matrix must be k x k");
    coef.middleCols(col, k) = a;
    col += k;
  }
  for (const auto& b : foreign) {
    require(b.rows() == k && b.cols() == k, "foreign lag matrix must be k x k");
    coef.middleCols(col, k) = b;
    col += k;
  }
  require(national.rows() == k, "national loading matrix must have k rows");
  coef.rightCols(national.cols()) = national;
  return coef;
}

Eigen::VectorXd RegionCoefficients::pack() const {
  const Eigen::MatrixXd coef = as_matrix();
  return Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
}

NationalCoefficients NationalCoefficients::zeros(const ModelDims& dims, bool with_intercept) {
  const int l = dims.national_vars;
  NationalCoefficients c;
  c.has_intercept = with_intercept;
  c.own.assign(dims.domestic_lags, Eigen::MatrixXd::Zero(l, l));
  c.cross.assign(dims.foreign_lags, Eigen::MatrixXd::Zero(l, dims.vars_per_region));
  c.intercept = Eigen::VectorXd::Zero(l);
  return c;
}

NationalCoefficients NationalCoefficients::from_matrix(const Eigen::MatrixXd& coef, int domestic_lags,
                                                       int foreign_lags, int vars_per_region, bool with_intercept) {
  const Eigen::Index l = coef.rows();
  require(coef.cols() == domestic_lags * l + foreign_lags * vars_per_region + (with_intercept ? 1 : 0),
          "national coefficient matrix has the wrong number of columns");
  NationalCoefficients c;
  Eigen::Index col = 0;
  for (int p = 0; p < domestic_lags; ++p, col += l) c.own.push_back(coef.middleCols(col, l));
  for (int q = 0; q < foreign_lags; ++q, col += vars_per_region) c.cross.push_back(coef.middleCols(col, vars_per_region));
  c.intercept = with_intercept ? Eigen::VectorXd(coef.col(col)) : Eigen::VectorXd::Zero(l);
  c.has_intercept = with_intercept;
  return c;
}

Eigen::MatrixXd NationalCoefficients::as_matrix() const {
  const bool with_intercept = has_intercept;
  const Eigen::Index l = intercept.size();
  const Eigen::Index k = cross.empty() ? 0 : cross.front().cols();
  const Eigen::Index cols = static_cast<Eigen::Index>(own.size()) * l +
                            static_cast<Eigen::Index>(cross.size()) * k + (with_intercept ? 1 : 0);
  Eigen::MatrixXd coef(l, cols);
  Eigen::Index col = 0;
  for (const auto& d : own) {
    require(d.rows() == l && d.cols() == l, "national own-lag matrix must be ell x ell");
    coef.middleCols(col, l) = d;
    col += l;
  }
  for (const auto& s : cross) {
    require(s.rows() == l && s.cols() == k, "national cross-average matrix must be ell x k");
    coef.middleCols(col, k) = s;
    col += k;
  }
  if (with_intercept) coef.col(col) = intercept;
  return coef;
}

Eigen::VectorXd NationalCoefficients::pack() const {
  const Eigen::MatrixXd coef = as_matrix();
  return Eigen::Map<const Eigen::VectorXd>(coef.data(), coef.size());
}

Eigen::MatrixXd GlobalSystem::companion() const {
  const int n = dim();
  const int m = order();
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n * m, n * m);
  for (int j = 0; j < m; ++j) comp.block(0, j * n, n, n) = transitions[j];
  if (m > 1) comp.block(n, 0, n * (m - 1), n * (m - 1)).setIdentity();
  return comp;
}

Array3 compute_foreign_averages(const Array3& regional, const WeightMatrix& w) {
  const int t_count = regional.dim0();
  const int n = regional.dim1();
  const int k = regional.dim2();
  require(w.size() == n, "weight matrix is " + std::to_string(w.size()) + "x" + std::to_string(w.size()) +
                             " but the panel has " + std::to_string(n) + " regions");
  Array3 out(t_count, n, k);
  if (n == 1) {
    warn("single region: foreign averages are defined as zero");
    return out;
  }
  const Eigen::MatrixXd& wm = w.matrix();
  for (int t = 0; t < t_count; ++t) {
    const Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>> y(&regional.data()[static_cast<std::size_t>(t) * n * k],
                                                                        k, n, Eigen::OuterStride<>(k));
    // y is k x N (column i = region i); ystar = y * W'.
    Eigen::MatrixXd ystar = y * wm.transpose();
    for (int i = 0; i < n; ++i) out.slice(t, i) = ystar.col(i);
  }
  return out;
}

Eigen::MatrixXd compute_national_cross_averages(const Array3& regional) {
  const int t_count = regional.dim0();
  const int n = regional.dim1();
  const int k = regional.dim2();
  require(n >= 1, "cross averages need at least one region");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t_count, k);
  for (int t = 0; t < t_count; ++t) {
    for (int i = 0; i < n; ++i) out.row(t) += regional.slice(t, i).transpose();
  }
  out /= static_cast<double>(n);
  return out;
}

Eigen::MatrixXd region_design(const PanelDataset& data, const Array3& foreign, int region, int domestic_lags,
                              int foreign_lags, int max_lag) {
  const int t_count = data.periods_count();
  const int k = data.vars_per_region();
  const int l = data.national_count();
  require(t_count > max_lag, "insufficient data: " + std::to_string(t_count) + " periods for lag order " +
                                 std::to_string(max_lag));
  const int rows = t_count - max_lag;
  Eigen::MatrixXd x(rows, 1 + (domestic_lags + foreign_lags) * k + l);
  for (int r = 0; r < rows; ++r) {
    const int t = max_lag + r;
    int col = 0;
    x(r, col++) = 1.0;
    for (int p = 1; p <= domestic_lags; ++p, col += k) x.row(r).segment(col, k) = data.regional.slice(t - p, region);
    for (int q = 1; q <= foreign_lags; ++q, col += k) x.row(r).segment(col, k) = foreign.slice(t - q, region);
    x.row(r).segment(col, l) = data.national.row(t - 1);
  }
  return x;
}

Eigen::MatrixXd national_design(const PanelDataset& data, const Eigen::MatrixXd& cross_avg, int domestic_lags,
                                int foreign_lags, int max_lag, bool with_intercept) {
  const int t_count = data.periods_count();
  const int k = data.vars_per_region();
  const int l = data.national_count();
  require(t_count > max_lag, "insufficient data: " + std::to_string(t_count) + " periods for lag order " +
                                 std::to_string(max_lag));
  const int rows = t_count - max_lag;
  Eigen::MatrixXd x(rows, domestic_lags * l + foreign_lags * k + (with_intercept ? 1 : 0));
  for (int r = 0; r < rows; ++r) {
    const int t = max_lag + r;
    int col = 0;
    for (int p = 1; p <= domestic_lags; ++p, col += l) x.row(r).segment(col, l) = data.national.row(t - p);
    for (int q = 1; q <= foreign_lags; ++q, col += k) x.row(r).segment(col, k) = cross_avg.row(t - q);
    if (with_intercept) x(r, col) = 1.0;
  }
  return x;
}

Eigen::MatrixXd region_residuals(const PanelDataset& data, const WeightMatrix& w, const RegionCoefficients& coeffs,
                                 int region) {
  const int k = data.vars_per_region();
  require(region >= 0 && region < data.region_count(), "region index out of range");
  require(coeffs.vars() == k, "coefficient block does not match the panel's variables per region");
  require(coeffs.national.cols() == data.national_count(), "C_i columns do not match national variables");
  const int p_lags = static_cast<int>(coeffs.domestic.size());
  const int q_lags = static_cast<int>(coeffs.foreign.size());
  const int max_lag = std::max(p_lags, q_lags);
  const Array3 foreign = compute_foreign_averages(data.regional, w);
  const Eigen::MatrixXd x = region_design(data, foreign, region, p_lags, q_lags, max_lag);
  Eigen::MatrixXd y(x.rows(), k);
  for (Eigen::Index r = 0; r < x.rows(); ++r) y.row(r) = data.regional.slice(max_lag + static_cast<int>(r), region);
  return y - x * coeffs.as_matrix().transpose();
}

Eigen::MatrixXd national_residuals(const PanelDataset& data, const NationalCoefficients& coeffs) {
  const int l = data.national_count();
  require(coeffs.vars() == l, "national coefficient block does not match national variables");
  const int p_lags = static_cast<int>(coeffs.own.size());
  const int q_lags = static_cast<int>(coeffs.cross.size());
  const int max_lag = std::max(p_lags, q_lags);
  const Eigen::MatrixXd cross = compute_national_cross_averages(data.regional);
  const Eigen::MatrixXd x = national_design(data, cross, p_lags, q_lags, max_lag, coeffs.has_intercept);
  return data.national.bottomRows(x.rows()) - x * coeffs.as_matrix().transpose();
}

Eigen::MatrixXd assemble_theta(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& log_vol_factors,
                               const Eigen::VectorXd& log_vol_idio) {
  require(loadings.rows() == log_vol_idio.size() && loadings.cols() == log_vol_factors.size(),
          "assemble_theta: dimension mismatch");
  if (!loadings.allFinite() || !log_vol_factors.allFinite() || !log_vol_idio.allFinite()) {
    throw InputError("assemble_theta: non-finite input");
  }
  Eigen::MatrixXd theta = loadings * log_vol_factors.array().exp().matrix().asDiagonal() * loadings.transpose();
  theta.diagonal() += log_vol_idio.array().exp().matrix();
  // Exact symmetry regardless of summation order.
  return 0.5 * (theta + theta.transpose());
}

GlobalSystem stack_global_system(const WeightMatrix& w, const std::vector<RegionCoefficients>& regions,
                                 const NationalCoefficients& national, const ModelDims& dims) {
  const int n = dims.regions;
  const int k = dims.vars_per_region;
  const int l = dims.national_vars;
  const int dim = dims.shock_dim();
  require(static_cast<int>(regions.size()) == n, "stack_global_system: region count mismatch");
  require(w.size() == n, "stack_global_system: weight matrix size mismatch");
  require(static_cast<int>(national.own.size()) == dims.domestic_lags &&
              static_cast<int>(national.cross.size()) == dims.foreign_lags && national.vars() == l,
          "stack_global_system: national block does not match dims");

  GlobalSystem g;
  g.transitions.assign(dims.max_lag(), Eigen::MatrixXd::Zero(dim, dim));
  g.intercept = Eigen::VectorXd::Zero(dim);
  g.intercept.head(l) = national.intercept;

  for (int p = 0; p < dims.domestic_lags; ++p) g.transitions[p].block(0, 0, l, l) = national.own[p];
  for (int q = 0; q < dims.foreign_lags; ++q) {
    for (int j = 0; j < n; ++j) {
      g.transitions[q].block(0, l + j * k, l, k) = national.cross[q] / static_cast<double>(n);
    }
  }

  for (int i = 0; i < n; ++i) {
    const RegionCoefficients& c = regions[i];
    require(c.vars() == k && static_cast<int>(c.domestic.size()) == dims.domestic_lags &&
                static_cast<int>(c.foreign.size()) == dims.foreign_lags && c.national.cols() == l,
            "stack_global_system: region " + std::to_string(i) + " does not match dims");
    const int row = l + i * k;
    g.intercept.segment(row, k) = c.intercept;
    for (int p = 0; p < dims.domestic_lags; ++p) g.transitions[p].block(row, row, k, k) += c.domestic[p];
    if (n > 1) {
      for (int q = 0; q < dims.foreign_lags; ++q) {
        for (int j = 0; j < n; ++j) {
          if (w(i, j) != 0.0) g.transitions[q].block(row, l + j * k, k, k) += w(i, j) * c.foreign[q];
        }
      }
    }
    g.transitions[0].block(row, 0, k, l) += c.national;
  }
  return g;
}

}  // namespace gvarfsv
