#include "gvarfsv/sampler.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gvarfsv/errors.hpp"
#include "gvarfsv/linalg.hpp"
#include "gvarfsv/parallel.hpp"

namespace gvarfsv {

void PriorConfig::validate() const {
  std::vector<std::string> problems;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) problems.push_back(std::string("prior.") + name + " must be > 0");
  };
  positive(common_mean_var, "common_mean_var");
  positive(variance_shape, "variance_shape");
  positive(variance_scale, "variance_scale");
  positive(national_coef_var, "national_coef_var");
  positive(loading_var, "loading_var");
  positive(sv_mean_var, "sv_mean_var");
  positive(sv_sigma_shape, "sv_sigma_shape");
  positive(sv_sigma_rate, "sv_sigma_rate");
  positive(sv_rho_a, "sv_rho_a");
  positive(sv_rho_b, "sv_rho_b");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

void SamplerConfig::validate() const {
  std::vector<std::string> problems;
  if (total_iterations < 1) problems.push_back("sampler.iterations must be >= 1");
  if (burn_in < 0) problems.push_back("sampler.burn_in must be >= 0");
  if (burn_in >= total_iterations) problems.push_back("sampler.burn_in must be < sampler.iterations");
  if (thin < 1) problems.push_back("sampler.thin must be >= 1");
  if (threads < 1) problems.push_back("threads must be >= 1");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

Eigen::MatrixXd ParameterState::common_component() const {
  if (loadings.cols() == 0) return Eigen::MatrixXd::Zero(log_vol_idio.rows(), loadings.rows());
  return factors * loadings.transpose();
}

bool ParameterState::all_finite() const {
  for (const auto& r : regions) {
    if (!r.pack().allFinite()) return false;
  }
  if (!national.pack().allFinite()) return false;
  if (!hierarchy.mean.allFinite() || !hierarchy.variance.allFinite() || (hierarchy.variance.array() <= 0.0).any()) {
    return false;
  }
  if (!loadings.allFinite() || !factors.allFinite() || !log_vol_factors.allFinite() || !log_vol_idio.allFinite()) {
    return false;
  }
  for (const auto& p : sv_factors) {
    if (!p.valid()) return false;
  }
  for (const auto& p : sv_idio) {
    if (!p.valid()) return false;
  }
  return true;
}

EstimationData EstimationData::build(PanelDataset panel, WeightMatrix weights, int domestic_lags, int foreign_lags,
                                     int factors, bool national_intercept) {
  panel.validate();
  EstimationData d;
  d.dims.regions = panel.region_count();
  d.dims.vars_per_region = panel.vars_per_region();
  d.dims.national_vars = panel.national_count();
  d.dims.domestic_lags = domestic_lags;
  d.dims.foreign_lags = foreign_lags;
  d.dims.factors = factors;
  d.dims.periods = panel.periods_count();
  d.dims.validate();
  require(weights.size() == d.dims.regions, "weight matrix size does not match the number of regions");
  d.national_intercept = national_intercept;

  const int max_lag = d.dims.max_lag();
  const int t_eff = d.dims.effective_periods();
  const Array3 foreign = compute_foreign_averages(panel.regional, weights);
  const Eigen::MatrixXd cross = compute_national_cross_averages(panel.regional);
  for (int i = 0; i < d.dims.regions; ++i) {
    d.region_x.push_back(region_design(panel, foreign, i, domestic_lags, foreign_lags, max_lag));
    Eigen::MatrixXd y(t_eff, d.dims.vars_per_region);
    for (int r = 0; r < t_eff; ++r) y.row(r) = panel.regional.slice(max_lag + r, i);
    d.region_y.push_back(std::move(y));
  }
  d.national_x = national_design(panel, cross, domestic_lags, foreign_lags, max_lag, national_intercept);
  d.national_y = panel.national.bottomRows(t_eff);
  d.panel = std::move(panel);
  d.weights = std::move(weights);
  return d;
}

Eigen::MatrixXd EstimationData::residuals(const ParameterState& state) const {
  const int l = dims.national_vars;
  const int k = dims.vars_per_region;
  Eigen::MatrixXd eps(dims.effective_periods(), dims.shock_dim());
  eps.leftCols(l) = national_y - national_x * state.national.as_matrix().transpose();
  for (int i = 0; i < dims.regions; ++i) {
    eps.middleCols(l + i * k, k) = region_y[i] - region_x[i] * state.regions[i].as_matrix().transpose();
  }
  return eps;
}

GaussianConditional region_equation_conditional(const ParameterState& state, const EstimationData& data, int region,
                                                int eq) {
  const ModelDims& dims = data.dims;
  const int k = dims.vars_per_region;
  const int regressors = dims.region_regressors();
  const int row = dims.global_index(region, eq);

  Eigen::VectorXd target = data.region_y[region].col(eq);
  if (dims.factors > 0) target -= state.factors * state.loadings.row(row).transpose();
  const Eigen::VectorXd noise = state.log_vol_idio.col(row).array().exp().matrix();

  Eigen::VectorXd prior_mean(regressors);
  Eigen::VectorXd prior_var(regressors);
  for (int c = 0; c < regressors; ++c) {
    prior_mean(c) = state.hierarchy.mean(c * k + eq);
    prior_var(c) = state.hierarchy.variance(c * k + eq);
  }
  return regression_conditional(data.region_x[region], target, noise, prior_mean, prior_var,
                                "region " + std::to_string(region) + " equation " + std::to_string(eq));
}

RegionCoefficients sample_region_coeffs(const ParameterState& state, const EstimationData& data, int region,
                                        Rng& rng) {
  const ModelDims& dims = data.dims;
  require(region >= 0 && region < dims.regions, "sample_region_coeffs: region index out of range");
  Eigen::MatrixXd coef(dims.vars_per_region, dims.region_regressors());
  for (int eq = 0; eq < dims.vars_per_region; ++eq) {
    coef.row(eq) = region_equation_conditional(state, data, region, eq).draw(rng).transpose();
  }
  return RegionCoefficients::from_matrix(coef, dims.domestic_lags, dims.foreign_lags, dims.national_vars);
}

Eigen::VectorXd sample_common_mean(const std::vector<Eigen::VectorXd>& betas, const Eigen::VectorXd& variances,
                                   const PriorConfig& prior, Rng& rng) {
  const Eigen::Index m = variances.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  for (const auto& b : betas) {
    require(b.size() == m, "sample_common_mean: coefficient length mismatch");
    sum += b;
  }
  const double n = static_cast<double>(betas.size());
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double precision = 1.0 / prior.common_mean_var + n / variances(j);
    const double mean = (sum(j) / variances(j)) / precision;
    out(j) = mean + rng.normal() / std::sqrt(precision);
  }
  return out;
}

Eigen::VectorXd sample_common_variances(const std::vector<Eigen::VectorXd>& betas, const Eigen::VectorXd& mean,
                                        const PriorConfig& prior, Rng& rng) {
  const Eigen::Index m = mean.size();
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(m);
  for (const auto& b : betas) {
    require(b.size() == m, "sample_common_variances: coefficient length mismatch");
    ss += (b - mean).array().square().matrix();
  }
  const double shape = prior.variance_shape + 0.5 * static_cast<double>(betas.size());
  Eigen::VectorXd out(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double scale = prior.variance_scale + 0.5 * ss(j);
    out(j) = 1.0 / rng.gamma(shape, scale);
    if (!(out(j) > 0.0) || !std::isfinite(out(j))) {
      throw NumericalError("sample_common_variances: degenerate draw for coordinate " + std::to_string(j));
    }
  }
  return out;
}

GaussianConditional national_equation_conditional(const ParameterState& state, const EstimationData& data,
                                                  const PriorConfig& prior, int eq) {
  const int cols = static_cast<int>(data.national_x.cols());
  Eigen::VectorXd target = data.national_y.col(eq);
  if (data.dims.factors > 0) target -= state.factors * state.loadings.row(eq).transpose();
  const Eigen::VectorXd noise = state.log_vol_idio.col(eq).array().exp().matrix();
  return regression_conditional(data.national_x, target, noise, Eigen::VectorXd::Zero(cols),
                                Eigen::VectorXd::Constant(cols, prior.national_coef_var),
                                "national equation " + std::to_string(eq));
}

NationalCoefficients sample_national_coeffs(const ParameterState& state, const EstimationData& data,
                                            const PriorConfig& prior, Rng& rng) {
  const ModelDims& dims = data.dims;
  Eigen::MatrixXd coef(dims.national_vars, data.national_x.cols());
  for (int eq = 0; eq < dims.national_vars; ++eq) {
    coef.row(eq) = national_equation_conditional(state, data, prior, eq).draw(rng).transpose();
  }
  return NationalCoefficients::from_matrix(coef, dims.domestic_lags, dims.foreign_lags, dims.vars_per_region,
                                           data.national_intercept);
}

namespace {

Eigen::MatrixXd ridge_ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd xtx = x.transpose() * x;
  xtx.diagonal().array() += 1e-6 * std::max(1.0, xtx.trace() / static_cast<double>(xtx.rows()));
  return robust_llt(xtx, "initial OLS").solve(x.transpose() * y);  // K x k
}

double safe_log_var(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / std::max<Eigen::Index>(1, v.size() - 1);
  return std::log(std::max(var, 1e-8));
}

}  // namespace

ParameterState initial_state(const EstimationData& data) {
  const ModelDims& dims = data.dims;
  const int l_total = dims.shock_dim();
  const int f = dims.factors;
  const int t_eff = dims.effective_periods();

  ParameterState s;
  for (int i = 0; i < dims.regions; ++i) {
    const Eigen::MatrixXd coef = ridge_ols(data.region_x[i], data.region_y[i]).transpose();
    s.regions.push_back(
        RegionCoefficients::from_matrix(coef, dims.domestic_lags, dims.foreign_lags, dims.national_vars));
  }
  const Eigen::MatrixXd ncoef = ridge_ols(data.national_x, data.national_y).transpose();
  s.national = NationalCoefficients::from_matrix(ncoef, dims.domestic_lags, dims.foreign_lags, dims.vars_per_region,
                                                 data.national_intercept);

  const int m = dims.coefs_per_region();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (const auto& r : s.regions) mean += r.pack();
  mean /= static_cast<double>(dims.regions);
  s.hierarchy.mean = mean;
  s.hierarchy.variance = Eigen::VectorXd::Constant(m, 0.1);

  // Principal-component start for the factors; the Gibbs chain takes over from here.
  s.loadings = Eigen::MatrixXd::Zero(l_total, f);
  s.factors = Eigen::MatrixXd::Zero(t_eff, f);
  s.log_vol_factors = Eigen::MatrixXd::Zero(t_eff, f);
  s.log_vol_idio = Eigen::MatrixXd::Zero(t_eff, l_total);  // placeholder so residuals() can run
  const Eigen::MatrixXd eps = data.residuals(s);
  if (f > 0) {
    const Eigen::RowVectorXd mu = eps.colwise().mean();
    Eigen::MatrixXd centered = eps.rowwise() - mu;
    Eigen::RowVectorXd sd = (centered.array().square().colwise().sum() / std::max(1, t_eff - 1)).sqrt();
    sd = sd.cwiseMax(1e-8);
    const Eigen::MatrixXd z = centered.array().rowwise() / sd.array();
    const Eigen::MatrixXd corr = z.transpose() * z / std::max(1, t_eff - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    const Eigen::MatrixXd vecs = es.eigenvectors().rightCols(f);
    Eigen::MatrixXd scores = z * vecs;
    for (int j = 0; j < f; ++j) {
      const double norm = std::sqrt(scores.col(j).squaredNorm() / std::max(1, t_eff - 1));
      if (norm > 0.0) scores.col(j) /= norm;
    }
    s.factors = scores;
    s.loadings = ridge_ols(scores, eps).transpose();
  }
  const Eigen::MatrixXd idio = eps - s.common_component();
  s.sv_idio.resize(l_total);
  for (int r = 0; r < l_total; ++r) {
    const double lv = safe_log_var(idio.col(r));
    s.log_vol_idio.col(r).setConstant(lv);
    s.sv_idio[r] = SvParams{lv, 0.5, 0.1};
  }
  s.sv_factors.assign(f, SvParams{0.0, 0.5, 0.1});
  return s;
}

namespace {

void wrap_step(int iteration, const char* step, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    throw NumericalError("iteration " + std::to_string(iteration) + ", step " + step + ": " + e.what());
  }
}

std::uint64_t tag(GibbsStep s) { return static_cast<std::uint64_t>(s); }

}  // namespace

PosteriorStore run_gibbs(const PanelDataset& panel, const WeightMatrix& w, const ModelDims& dims,
                         const PriorConfig& prior, const SamplerConfig& config, const ProgressCallback& progress) {
  prior.validate();
  config.validate();
  const EstimationData data =
      EstimationData::build(panel, w, dims.domestic_lags, dims.foreign_lags, dims.factors, config.national_intercept);
  require(data.dims == dims, "run_gibbs: dims do not match the dataset");

  PosteriorStore store;
  store.dims = data.dims;
  store.prior = prior;
  store.sampler = config;
  store.region_names = panel.region_names;
  store.region_variables = panel.region_variables;
  store.national_variables = panel.national_variables;
  store.periods = panel.periods;
  store.draws.reserve(config.retained_draws());

  const int n = dims.regions;
  const int f = dims.factors;
  const int l_total = dims.shock_dim();
  const std::uint64_t seed = config.seed;

  ParameterState state = initial_state(data);
  std::vector<RegionCoefficients> next_regions(n);
  std::vector<Eigen::VectorXd> betas(n);
  std::vector<SvDraw> vol_draws(f + l_total);

  for (int it = 0; it < config.total_iterations; ++it) {
    const auto iter = static_cast<std::uint64_t>(it);

    wrap_step(it, "(i) region coefficients", [&] {
      parallel_for(n, config.threads, [&](int i) {
        Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kRegionCoefficients), static_cast<std::uint64_t>(i)}));
        next_regions[i] = sample_region_coeffs(state, data, i, rng);
      });
      state.regions = next_regions;
      for (int i = 0; i < n; ++i) betas[i] = state.regions[i].pack();
    });

    wrap_step(it, "(i-b) hierarchy variances", [&] {
      Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kHierarchyVariances)}));
      state.hierarchy.variance = sample_common_variances(betas, state.hierarchy.mean, prior, rng);
    });

    wrap_step(it, "(ii) common mean", [&] {
      Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kCommonMean)}));
      state.hierarchy.mean = sample_common_mean(betas, state.hierarchy.variance, prior, rng);
    });

    wrap_step(it, "(iii) national coefficients", [&] {
      Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kNationalCoefficients)}));
      state.national = sample_national_coeffs(state, data, prior, rng);
    });

    const Eigen::MatrixXd eps = data.residuals(state);

    if (f > 0) {
      wrap_step(it, "(iv) loadings", [&] {
        Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kLoadings)}));
        state.loadings = sample_loadings(eps, state.factors, state.log_vol_idio, prior, rng);
      });
      wrap_step(it, "(v) factors", [&] {
        Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kFactors)}));
        state.factors = sample_factors_path(state.loadings, state.log_vol_factors, state.log_vol_idio, eps, rng);
      });
    }

    wrap_step(it, "(vi) volatilities", [&] {
      const Eigen::MatrixXd idio = eps - state.common_component();
      parallel_for(f + l_total, config.threads, [&](int s) {
        Rng rng(derive_seed(seed, {iter, tag(GibbsStep::kVolatilities), static_cast<std::uint64_t>(s)}));
        if (s < f) {
          vol_draws[s] = sample_volatility_path(state.factors.col(s), state.log_vol_factors.col(s),
                                                state.sv_factors[s], prior, rng);
        } else {
          const int r = s - f;
          vol_draws[s] = sample_volatility_path(idio.col(r), state.log_vol_idio.col(r), state.sv_idio[r], prior, rng);
        }
      });
      for (int s = 0; s < f; ++s) {
        state.log_vol_factors.col(s) = vol_draws[s].path;
        state.sv_factors[s] = vol_draws[s].params;
      }
      for (int r = 0; r < l_total; ++r) {
        state.log_vol_idio.col(r) = vol_draws[f + r].path;
        state.sv_idio[r] = vol_draws[f + r].params;
      }
    });

    if (!state.all_finite()) {
      throw NumericalError("iteration " + std::to_string(it) + ": non-finite or invalid parameter state");
    }

    if (it >= config.burn_in && (it - config.burn_in) % config.thin == 0) {
      StoredDraw d;
      d.iteration = it;
      d.mean_factor_var = state.log_vol_factors.array().exp().colwise().mean().transpose();
      d.mean_idio_var = state.log_vol_idio.array().exp().colwise().mean().transpose();
      d.state = state;
      if (!config.store_paths) {
        d.state.factors.resize(0, f);
        d.state.log_vol_factors.resize(0, f);
        d.state.log_vol_idio.resize(0, l_total);
      }
      store.draws.push_back(std::move(d));
    }
    if (progress) progress(it);
  }
  return store;
}

}  // namespace gvarfsv
