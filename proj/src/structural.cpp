#include "gvarfsv/structural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gvarfsv/errors.hpp"
#include "gvarfsv/linalg.hpp"
#include "gvarfsv/parallel.hpp"

namespace gvarfsv {

namespace {

// Plain Cholesky; returns the index of the first non-positive pivot or -1.
int cholesky_in_place(Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - a.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return static_cast<int>(j);
    d = std::sqrt(d);
    a(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      a(i, j) = (a(i, j) - a.row(i).head(j).dot(a.row(j).head(j))) / d;
    }
  }
  a.triangularView<Eigen::StrictlyUpper>().setZero();
  return -1;
}

void validate_ordering(const std::vector<int>& ordering, int n) {
  require(static_cast<int>(ordering.size()) == n, "ordering must list every variable exactly once");
  std::vector<int> seen(n, 0);
  for (int v : ordering) {
    require(v >= 0 && v < n && seen[v] == 0, "ordering is not a permutation");
    seen[v] = 1;
  }
}

// Psi_h * impact for h = 0..H via the lag recursion.
std::vector<Eigen::MatrixXd> propagate(const GlobalSystem& system, const Eigen::MatrixXd& impact, int horizon) {
  require(horizon >= 0, "horizon must be >= 0");
  require(impact.rows() == system.dim(), "impact has the wrong number of rows");
  std::vector<Eigen::MatrixXd> out;
  out.reserve(horizon + 1);
  out.push_back(impact);
  for (int h = 1; h <= horizon; ++h) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(impact.rows(), impact.cols());
    for (int m = 1; m <= system.order() && m <= h; ++m) next.noalias() += system.transitions[m - 1] * out[h - m];
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace

Eigen::MatrixXd CholeskyIdentification::impact() const {
  const auto n = static_cast<Eigen::Index>(ordering.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index pos = 0; pos < n; ++pos) out.row(ordering[pos]) = lower.row(pos);
  return out;
}

CholeskyIdentification identify_cholesky(const Eigen::MatrixXd& theta, const std::vector<int>& ordering) {
  const int n = static_cast<int>(theta.rows());
  require(theta.cols() == n && n >= 1, "identify_cholesky: matrix must be square");
  CholeskyIdentification id;
  id.ordering = ordering;
  if (id.ordering.empty()) {
    id.ordering.resize(n);
    std::iota(id.ordering.begin(), id.ordering.end(), 0);
  }
  validate_ordering(id.ordering, n);

  Eigen::MatrixXd permuted(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) permuted(a, b) = theta(id.ordering[a], id.ordering[b]);
  }
  Eigen::MatrixXd work = permuted;
  int failed = cholesky_in_place(work);
  if (failed >= 0) {
    work = permuted;
    work.diagonal().array() += kJitterScale * std::abs(permuted.trace()) / n;
    failed = cholesky_in_place(work);
    if (failed >= 0) {
      throw NumericalError("identify_cholesky: covariance is not positive definite; leading minor of order " +
                           std::to_string(failed + 1) + " (variable " + std::to_string(id.ordering[failed]) +
                           ") is non-positive");
    }
  }
  id.lower = std::move(work);
  return id;
}

ImpulseResponse impulse_response(const GlobalSystem& system, const Eigen::VectorXd& impact, int horizon) {
  const auto paths = propagate(system, impact, horizon);
  ImpulseResponse out;
  out.response.resize(horizon + 1, system.dim());
  for (int h = 0; h <= horizon; ++h) out.response.row(h) = paths[h].col(0).transpose();
  out.spectral_radius = spectral_radius(system.companion());
  out.explosive = out.spectral_radius > kExplosiveRadius;
  return out;
}

Array3 fevd(const GlobalSystem& system, const Eigen::MatrixXd& impact, int horizon) {
  const int n = system.dim();
  require(impact.cols() == n, "fevd needs the full impact matrix");
  const auto paths = propagate(system, impact, horizon);
  Array3 out(n, n, horizon + 1);
  Eigen::MatrixXd cumulative = Eigen::MatrixXd::Zero(n, n);
  bool warned = false;
  for (int h = 0; h <= horizon; ++h) {
    cumulative += paths[h].array().square().matrix();
    for (int v = 0; v < n; ++v) {
      const double total = cumulative.row(v).sum();
      for (int s = 0; s < n; ++s) out(v, s, h) = total > 0.0 ? cumulative(v, s) / total : 0.0;
      if (!(total > 0.0) && !warned) {
        warn("fevd: zero forecast-error variance for variable " + std::to_string(v) + "; shares set to 0");
        warned = true;
      }
    }
  }
  return out;
}

double quantile_linear(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

QuantileSummary summarize_posterior(const Array3& draws) {
  const int nd = draws.dim0();
  const int nv = draws.dim1();
  const int nh = draws.dim2();
  require(nd >= 2, "summarize_posterior needs at least 2 draws");
  QuantileSummary s{Eigen::MatrixXd(nv, nh), Eigen::MatrixXd(nv, nh), Eigen::MatrixXd(nv, nh)};
  std::vector<double> cell(nd);
  for (int v = 0; v < nv; ++v) {
    for (int h = 0; h < nh; ++h) {
      for (int d = 0; d < nd; ++d) cell[d] = draws(d, v, h);
      std::sort(cell.begin(), cell.end());
      auto at = [&](double q) {
        const double pos = q * (nd - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min<std::size_t>(lo + 1, nd - 1);
        return cell[lo] + (pos - static_cast<double>(lo)) * (cell[hi] - cell[lo]);
      };
      s.q16(v, h) = at(0.16);
      s.q50(v, h) = at(0.50);
      s.q84(v, h) = at(0.84);
    }
  }
  return s;
}

std::string to_string(ResponseClass c) {
  switch (c) {
    case ResponseClass::kPositive: return "Positive";
    case ResponseClass::kSlightlyPositive: return "Slightly positive";
    case ResponseClass::kSlightlyNegative: return "Slightly negative";
    case ResponseClass::kNegative: return "Negative";
    case ResponseClass::kInsignificant: return "Insignificant";
  }
  return "Insignificant";
}

std::vector<Classification> peak_and_classify(const std::vector<RegionBand>& bands, double upper_frac,
                                              double lower_frac, ClassificationThresholds* thresholds) {
  require(upper_frac > 0.0 && upper_frac < 1.0 && lower_frac > 0.0 && lower_frac < 1.0,
          "classification fractions must lie in (0, 1)");
  std::vector<Classification> out(bands.size());
  std::vector<double> peaks;
  std::vector<bool> significant(bands.size());
  for (std::size_t r = 0; r < bands.size(); ++r) {
    const RegionBand& b = bands[r];
    require(b.q50.size() >= 1 && b.q16.size() == b.q50.size() && b.q84.size() == b.q50.size(),
            "classification band has inconsistent lengths");
    Eigen::Index best = 0;
    for (Eigen::Index h = 1; h < b.q50.size(); ++h) {
      if (std::abs(b.q50(h)) > std::abs(b.q50(best))) best = h;
    }
    out[r].peak_value = b.q50(best);
    out[r].peak_horizon = static_cast<int>(best);
    significant[r] = b.q16(best) > 0.0 || b.q84(best) < 0.0;
    peaks.push_back(out[r].peak_value);
  }
  if (bands.empty()) return out;

  const double upper = quantile_linear(peaks, 1.0 - upper_frac);
  const double lower = quantile_linear(peaks, lower_frac);
  if (thresholds != nullptr) *thresholds = {upper, lower};
  for (std::size_t r = 0; r < bands.size(); ++r) {
    const double p = out[r].peak_value;
    if (!significant[r]) {
      out[r].cls = ResponseClass::kInsignificant;
    } else if (p > 0.0) {
      out[r].cls = p > upper ? ResponseClass::kPositive : ResponseClass::kSlightlyPositive;
    } else {
      out[r].cls = p < lower ? ResponseClass::kNegative : ResponseClass::kSlightlyNegative;
    }
  }
  return out;
}

Eigen::MatrixXd draw_covariance(const StoredDraw& draw, const StructuralOptions& options) {
  const ParameterState& s = draw.state;
  if (options.covariance == CovarianceChoice::kTimeAverage) {
    Eigen::MatrixXd theta = s.loadings * draw.mean_factor_var.asDiagonal() * s.loadings.transpose();
    theta.diagonal() += draw.mean_idio_var;
    return 0.5 * (theta + theta.transpose());
  }
  require(s.log_vol_idio.rows() > 0, "date-specific covariance needs stored volatility paths");
  require(options.date_index >= 0 && options.date_index < s.log_vol_idio.rows(),
          "covariance date index outside the effective sample");
  return assemble_theta(s.loadings, s.log_vol_factors.row(options.date_index).transpose(),
                        s.log_vol_idio.row(options.date_index).transpose());
}

StructuralResult compute_structural(const PosteriorStore& store, const WeightMatrix& w,
                                    const StructuralOptions& options) {
  const int nd = static_cast<int>(store.draws.size());
  const int n = store.dims.shock_dim();
  const int nh = options.horizon + 1;
  require(nd >= 2, "structural analysis needs at least 2 posterior draws");
  require(options.horizon >= 0, "horizon must be >= 0");
  if (!options.ordering.empty()) {
    validate_ordering(options.ordering, n);
    require(options.ordering.front() == 0, "the uncertainty index must be first in the ordering");
  }

  StructuralResult out;
  out.irf = Array3(nd, n, nh);
  out.fevd = Array3(nd, n, nh);
  std::vector<Array3> full(nd);
  std::vector<int> explosive(nd, 0);

  parallel_for(nd, options.threads, [&](int d) {
    const StoredDraw& draw = store.draws[d];
    const GlobalSystem system = stack_global_system(w, draw.state.regions, draw.state.national, store.dims);
    const CholeskyIdentification id = identify_cholesky(draw_covariance(draw, options), options.ordering);
    Eigen::MatrixXd impact = id.impact();
    if (options.rescale_impact) impact.col(0) /= impact(0, 0);
    const ImpulseResponse ir = impulse_response(system, impact.col(0), options.horizon);
    explosive[d] = ir.explosive ? 1 : 0;
    for (int v = 0; v < n; ++v) {
      for (int h = 0; h < nh; ++h) out.irf(d, v, h) = ir.response(h, v);
    }
    full[d] = fevd(system, id.impact(), options.horizon);
    for (int v = 0; v < n; ++v) {
      for (int h = 0; h < nh; ++h) out.fevd(d, v, h) = full[d](v, 0, h);
    }
  });

  // Fixed-order reduction keeps the mean independent of the thread count.
  out.fevd_mean = Array3(n, n, nh);
  for (int d = 0; d < nd; ++d) {
    for (std::size_t i = 0; i < out.fevd_mean.size(); ++i) out.fevd_mean.data()[i] += full[d].data()[i];
  }
  for (double& v : out.fevd_mean.data()) v /= nd;
  out.explosive_draws = std::accumulate(explosive.begin(), explosive.end(), 0);
  if (out.explosive_draws > 0) {
    warn(std::to_string(out.explosive_draws) + " of " + std::to_string(nd) +
         " draws have an explosive companion matrix (spectral radius > " + std::to_string(kExplosiveRadius) + ")");
  }
  out.irf_quantiles = summarize_posterior(out.irf);
  out.fevd_quantiles = summarize_posterior(out.fevd);
  return out;
}

}  // namespace gvarfsv
