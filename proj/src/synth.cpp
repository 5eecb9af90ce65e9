#include "gvarfsv/synth.hpp"

#include <cmath>
#include <cstdio>

#include "gvarfsv/errors.hpp"
#include "gvarfsv/linalg.hpp"
#include "gvarfsv/random.hpp"

namespace gvarfsv {

namespace {

constexpr double kStableRadius = 0.95;

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Hierarchy mean: mild own persistence, small spillovers, |mu_j| <= 0.5.
Eigen::VectorXd draw_common_mean(const ModelDims& dims, Rng& rng) {
  const int k = dims.vars_per_region;
  RegionCoefficients mu = RegionCoefficients::zeros(dims);
  for (int j = 0; j < k; ++j) mu.intercept(j) = uniform(rng, -0.3, 0.3);
  for (int p = 0; p < dims.domestic_lags; ++p) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        mu.domestic[p](a, b) = a == b ? uniform(rng, 0.2, 0.45) / (p + 1) : uniform(rng, -0.1, 0.1);
      }
    }
  }
  for (int q = 0; q < dims.foreign_lags; ++q) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) mu.foreign[q](a, b) = uniform(rng, -0.15, 0.15) / (q + 1);
    }
  }
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < dims.national_vars; ++b) mu.national(a, b) = uniform(rng, -0.2, 0.2);
  }
  return mu.pack();
}

NationalCoefficients draw_national(const ModelDims& dims, Rng& rng) {
  NationalCoefficients nc = NationalCoefficients::zeros(dims);
  const int l = dims.national_vars;
  for (int p = 0; p < dims.domestic_lags; ++p) {
    for (int a = 0; a < l; ++a) {
      for (int b = 0; b < l; ++b) {
        nc.own[p](a, b) = a == b ? uniform(rng, 0.3, 0.6) / (p + 1) : uniform(rng, -0.1, 0.1);
      }
    }
  }
  for (int q = 0; q < dims.foreign_lags; ++q) {
    for (int a = 0; a < l; ++a) {
      for (int b = 0; b < dims.vars_per_region; ++b) nc.cross[q](a, b) = uniform(rng, -0.1, 0.1) / (q + 1);
    }
  }
  return nc;
}

double stationary_draw(const SvParams& p, Rng& rng) {
  const double sd = std::sqrt(p.innovation_var / (1.0 - p.persistence * p.persistence));
  return p.level + sd * rng.normal();
}

double ar_step(const SvParams& p, double prev, Rng& rng) {
  return p.level + p.persistence * (prev - p.level) + std::sqrt(p.innovation_var) * rng.normal();
}

}  // namespace

SyntheticTruth make_truth(const ModelDims& dims, const WeightMatrix& w, std::uint64_t seed,
                          const TruthOptions& options) {
  dims.validate();
  require(w.size() == dims.regions, "make_truth: weight matrix size differs from region count");
  Rng rng(derive_seed(seed, {0x7275746855ULL}));
  SyntheticTruth truth;
  truth.dims = dims;
  const int m = dims.coefs_per_region();
  truth.hierarchy.mean = draw_common_mean(dims, rng);
  truth.hierarchy.variance = Eigen::VectorXd::Constant(m, options.coef_variance);
  truth.national = draw_national(dims, rng);

  bool stable = false;
  for (int attempt = 0; attempt < options.max_attempts && !stable; ++attempt) {
    truth.regions.clear();
    for (int i = 0; i < dims.regions; ++i) {
      const Eigen::VectorXd beta =
          truth.hierarchy.mean + std::sqrt(options.coef_variance) * rng.normal_vector(m);
      truth.regions.push_back(RegionCoefficients::unpack(beta, dims));
    }
    const GlobalSystem g = stack_global_system(w, truth.regions, truth.national, dims);
    stable = spectral_radius(g.companion()) < kStableRadius;
  }
  if (!stable) {
    throw InputError("make_truth: no stable region draw in " + std::to_string(options.max_attempts) + " attempts");
  }

  const int l_total = dims.shock_dim();
  truth.loadings = Eigen::MatrixXd(l_total, dims.factors);
  for (int r = 0; r < l_total; ++r) {
    for (int f = 0; f < dims.factors; ++f) truth.loadings(r, f) = options.loading_scale * uniform(rng, 0.5, 1.5);
  }
  truth.sv_factors.assign(dims.factors, SvParams{0.0, 0.9, 0.05});
  for (int r = 0; r < l_total; ++r) {
    truth.sv_idio.push_back(SvParams{options.idio_log_var + uniform(rng, -0.3, 0.3), 0.9, 0.05});
  }
  return truth;
}

SyntheticPanel synth_generate(const SyntheticTruth& truth, const WeightMatrix& w, std::uint64_t seed,
                              const SynthOptions& options) {
  const ModelDims& dims = truth.dims;
  dims.validate();
  require(w.size() == dims.regions, "synth_generate: weight matrix size differs from region count");
  require(static_cast<int>(truth.regions.size()) == dims.regions, "synth_generate: region coefficient count");
  const GlobalSystem g = stack_global_system(w, truth.regions, truth.national, dims);
  const double radius = spectral_radius(g.companion());
  if (!(radius < 1.0)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", radius);
    throw InputError(std::string("synth_generate: requested system is not stable (spectral radius ") + buf + ")");
  }

  Rng rng(derive_seed(seed, {0x73796e7468ULL}));
  const int n_state = g.dim();
  const int order = g.order();
  const int l_total = dims.shock_dim();
  const int f = dims.factors;
  const int burn = options.zero_noise ? 0 : options.burn_in;
  const int total = burn + dims.periods;
  const int t_eff = dims.effective_periods();

  std::vector<Eigen::VectorXd> x(total, Eigen::VectorXd::Zero(n_state));
  Eigen::VectorXd h(f);
  Eigen::VectorXd omega(l_total);
  for (int j = 0; j < f; ++j) h(j) = stationary_draw(truth.sv_factors[j], rng);
  for (int r = 0; r < l_total; ++r) omega(r) = stationary_draw(truth.sv_idio[r], rng);

  SyntheticPanel out;
  out.truth = truth;
  out.truth.factors = Eigen::MatrixXd::Zero(t_eff, f);
  out.truth.log_vol_factors = Eigen::MatrixXd::Zero(t_eff, f);
  out.truth.log_vol_idio = Eigen::MatrixXd::Zero(t_eff, l_total);
  out.truth.innovations = Eigen::MatrixXd::Zero(t_eff, l_total);

  const int first_kept = burn + dims.max_lag();
  for (int t = 0; t < total; ++t) {
    if (t < order) {
      // Pre-sample values: random when noiseless so the recursion is not trivially zero.
      if (options.zero_noise) x[t] = rng.normal_vector(n_state);
      continue;
    }
    Eigen::VectorXd next = g.intercept;
    for (int m = 0; m < order; ++m) next += g.transitions[m] * x[t - 1 - m];
    if (!options.zero_noise) {
      for (int j = 0; j < f; ++j) h(j) = ar_step(truth.sv_factors[j], h(j), rng);
      for (int r = 0; r < l_total; ++r) omega(r) = ar_step(truth.sv_idio[r], omega(r), rng);
      Eigen::VectorXd fac(f);
      for (int j = 0; j < f; ++j) fac(j) = std::exp(0.5 * h(j)) * rng.normal();
      Eigen::VectorXd eps = truth.loadings * fac;
      for (int r = 0; r < l_total; ++r) eps(r) += std::exp(0.5 * omega(r)) * rng.normal();
      next += eps;
      if (t >= first_kept) {
        const int row = t - first_kept;
        out.truth.factors.row(row) = fac.transpose();
        out.truth.log_vol_factors.row(row) = h.transpose();
        out.truth.log_vol_idio.row(row) = omega.transpose();
        out.truth.innovations.row(row) = eps.transpose();
      }
    }
    x[t] = next;
  }

  PanelDataset& p = out.panel;
  const int k = dims.vars_per_region;
  const int l = dims.national_vars;
  p.regional = Array3(dims.periods, dims.regions, k);
  p.national = Eigen::MatrixXd(dims.periods, l);
  for (int t = 0; t < dims.periods; ++t) {
    const Eigen::VectorXd& s = x[burn + t];
    for (int j = 0; j < l; ++j) p.national(t, j) = s(j);
    for (int i = 0; i < dims.regions; ++i) {
      for (int j = 0; j < k; ++j) p.regional(t, i, j) = s(dims.global_index(i, j));
    }
  }
  p.region_names = synth_region_names(dims.regions);
  for (int j = 0; j < k; ++j) p.region_variables.push_back(j == 0 ? "inequality" : "y" + std::to_string(j + 1));
  for (int j = 0; j < l; ++j) p.national_variables.push_back(j == 0 ? "uncertainty" : "z" + std::to_string(j + 1));
  const int start = 1990 * 4;
  for (int t = 0; t < dims.periods; ++t) p.periods.push_back(Quarter::from_index(start + t).label());
  p.validate();
  return out;
}

std::vector<std::string> synth_region_names(int regions) {
  std::vector<std::string> names;
  for (int i = 0; i < regions; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "R%02d", i + 1);
    names.emplace_back(buf);
  }
  return names;
}

Centroids synth_centroids(int regions, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x63656e74ULL}));
  Centroids c;
  c.convention = CoordinateConvention::kPlanar;
  c.regions = synth_region_names(regions);
  while (static_cast<int>(c.coords.size()) < regions) {
    const Eigen::Vector2d p(10.0 * rng.uniform(), 10.0 * rng.uniform());
    bool ok = true;
    for (const auto& q : c.coords) ok = ok && (p - q).norm() >= 0.1;
    if (ok) c.coords.push_back(p);
  }
  return c;
}

RegionCovariates synth_covariates(const std::vector<std::string>& regions, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x636f76ULL}));
  RegionCovariates c;
  c.regions = regions;
  c.names = {"agric", "constr", "manu", "dir", "bussum", "unemp"};
  const int n = static_cast<int>(regions.size());
  c.values = Eigen::MatrixXd(n, 6);
  for (int i = 0; i < n; ++i) {
    c.values(i, 0) = uniform(rng, 0.005, 0.06);
    c.values(i, 1) = uniform(rng, 0.03, 0.08);
    c.values(i, 2) = uniform(rng, 0.05, 0.25);
    c.values(i, 3) = uniform(rng, 0.12, 0.22);
    c.values(i, 4) = uniform(rng, 0.06, 0.12);
    c.values(i, 5) = uniform(rng, 3.5, 8.0);
  }
  return c;
}

std::vector<HouseholdRecord> synth_survey(const std::vector<std::string>& regions, int first_year, int last_year,
                                          int households_per_year, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x73757276ULL}));
  std::vector<HouseholdRecord> out;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const double spread = uniform(rng, 0.6, 0.9);
    for (int year = first_year; year <= last_year; ++year) {
      const double drift = 0.005 * (year - first_year);
      for (int h = 0; h < households_per_year; ++h) {
        HouseholdRecord r;
        r.region = regions[i];
        r.year = year;
        r.household_size = 1 + static_cast<int>(rng.uniform() * 5.0);
        r.income = std::exp(10.5 + (spread + drift) * rng.normal());
        if (rng.uniform() < 0.01) r.income = -r.income * 0.05;  // a few negative incomes
        r.weight = uniform(rng, 500.0, 3000.0);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace gvarfsv
