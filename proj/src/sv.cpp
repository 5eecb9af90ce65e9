#include "gvarfsv/sv.hpp"

#include <cmath>
#include <limits>

#include "gvarfsv/errors.hpp"
#include "gvarfsv/linalg.hpp"
#include "gvarfsv/model.hpp"

namespace gvarfsv {

namespace {

constexpr int kRhoAttempts = 100;

double log_normal_kernel(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(var) - 0.5 * d * d / var;
}

// Log prior of (level, persistence) up to a constant.
double log_prior_level_persistence(double level, double persistence, const PriorConfig& prior) {
  const double u = 0.5 * (persistence + 1.0);
  return -0.5 * level * level / prior.sv_mean_var + (prior.sv_rho_a - 1.0) * std::log(u) +
         (prior.sv_rho_b - 1.0) * std::log1p(-u);
}

// Sum of squared AR(1) innovations including the stationary initial term.
double innovation_ss(const Eigen::VectorXd& h, double level, double persistence) {
  const Eigen::Index n = h.size();
  double ss = (h(0) - level) * (h(0) - level) * (1.0 - persistence * persistence);
  for (Eigen::Index t = 1; t < n; ++t) {
    const double e = h(t) - level - persistence * (h(t - 1) - level);
    ss += e * e;
  }
  return ss;
}

// Independence MH for sigma^2 using the posterior under p(s) ~ 1/s as proposal.
double update_innovation_var(const Eigen::VectorXd& h, const SvParams& p, const PriorConfig& prior, Rng& rng) {
  const double n = static_cast<double>(h.size());
  const double ss = std::max(innovation_ss(h, p.level, p.persistence), 1e-300);
  const double proposal = 1.0 / rng.gamma(0.5 * n, 0.5 * ss);
  if (!(proposal > 0.0) || !std::isfinite(proposal)) return p.innovation_var;
  auto log_weight = [&](double s) { return prior.sv_sigma_shape * std::log(s) - prior.sv_sigma_rate * s; };
  const double log_accept = log_weight(proposal) - log_weight(p.innovation_var);
  return std::log(rng.uniform()) < log_accept ? proposal : p.innovation_var;
}

// Independence MH for (level, persistence): Gaussian proposal from the
// regression of h_t on (1, h_{t-1}), truncated to |persistence| < 1.
SvParams update_level_persistence(const Eigen::VectorXd& h, const SvParams& p, const PriorConfig& prior, Rng& rng) {
  const Eigen::Index n = h.size();
  if (n < 3) return p;
  Eigen::Matrix2d xtx = Eigen::Matrix2d::Zero();
  Eigen::Vector2d xty = Eigen::Vector2d::Zero();
  for (Eigen::Index t = 1; t < n; ++t) {
    const Eigen::Vector2d x(1.0, h(t - 1));
    xtx += x * x.transpose();
    xty += x * h(t);
  }
  Eigen::LLT<Eigen::Matrix2d> llt(xtx);
  if (llt.info() != Eigen::Success) return p;
  const Eigen::Vector2d center = llt.solve(xty);
  const Eigen::Matrix2d chol_prec = llt.matrixL();
  const double scale = std::sqrt(p.innovation_var);

  Eigen::Vector2d draw;
  bool found = false;
  for (int attempt = 0; attempt < kRhoAttempts; ++attempt) {
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    draw = center + scale * chol_prec.transpose().triangularView<Eigen::Upper>().solve(z);
    if (std::abs(draw(1)) < 1.0) {
      found = true;
      break;
    }
  }
  if (!found) return p;

  SvParams proposal = p;
  proposal.persistence = draw(1);
  proposal.level = draw(0) / (1.0 - draw(1));

  auto log_weight = [&](const SvParams& q) {
    const double init_var = q.innovation_var / (1.0 - q.persistence * q.persistence);
    return log_prior_level_persistence(q.level, q.persistence, prior) + log_normal_kernel(h(0), q.level, init_var) -
           std::log(1.0 - q.persistence);
  };
  const double log_accept = log_weight(proposal) - log_weight(p);
  return std::log(rng.uniform()) < log_accept ? proposal : p;
}

// Non-centered redraw of (level, scale) with the standardized path fixed.
// With shape 1/2 the Gamma prior on sigma^2 is a N(0, 1/(2 rate)) prior on
// +-sigma and the step is an exact Gibbs draw; otherwise an MH correction
// |sigma|^(2 shape - 1) applies.
void interweave(Eigen::VectorXd& h, SvParams& p, const Eigen::VectorXd& log_sq, const Eigen::VectorXi& indicators,
                const PriorConfig& prior, Rng& rng) {
  const double sigma = std::sqrt(p.innovation_var);
  const Eigen::VectorXd standardized = (h.array() - p.level) / sigma;

  Eigen::Matrix2d precision = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (Eigen::Index t = 0; t < h.size(); ++t) {
    const int c = indicators(t);
    const double w = 1.0 / LogChiSquareMixture::variance[c];
    const Eigen::Vector2d x(1.0, standardized(t));
    precision += w * x * x.transpose();
    rhs += w * x * (log_sq(t) - LogChiSquareMixture::mean[c]);
  }
  precision(0, 0) += 1.0 / prior.sv_mean_var;
  precision(1, 1) += 2.0 * prior.sv_sigma_rate;
  Eigen::LLT<Eigen::Matrix2d> llt(precision);
  if (llt.info() != Eigen::Success) return;
  const Eigen::Vector2d mean = llt.solve(rhs);
  const Eigen::Matrix2d chol = llt.matrixL();
  const Eigen::Vector2d z(rng.normal(), rng.normal());
  const Eigen::Vector2d draw = mean + chol.transpose().triangularView<Eigen::Upper>().solve(z);

  const double new_sigma = draw(1);
  if (!(std::abs(new_sigma) > 0.0) || !std::isfinite(new_sigma) || !std::isfinite(draw(0))) return;
  const double exponent = 2.0 * prior.sv_sigma_shape - 1.0;
  if (exponent != 0.0) {
    const double log_accept = exponent * (std::log(std::abs(new_sigma)) - std::log(sigma));
    if (!(std::log(rng.uniform()) < log_accept)) return;
  }
  p.level = draw(0);
  p.innovation_var = new_sigma * new_sigma;
  h = (draw(0) + new_sigma * standardized.array()).matrix();
}

}  // namespace

bool SvParams::valid() const noexcept {
  return std::isfinite(level) && std::abs(persistence) < 1.0 && innovation_var > 0.0 && std::isfinite(innovation_var);
}

FactorConditional factor_conditional(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& factor_var,
                                     const Eigen::MatrixXd& theta, const Eigen::VectorXd& eps) {
  const Eigen::Index l = loadings.rows();
  const Eigen::Index f = loadings.cols();
  require(factor_var.size() == f && theta.rows() == l && theta.cols() == l && eps.size() == l,
          "factor_conditional: dimension mismatch");
  const auto llt = robust_llt(theta, "factor conditional Theta_t");
  const Eigen::MatrixXd loadings_h = loadings * factor_var.asDiagonal();  // Lambda H_t
  const Eigen::MatrixXd upsilon = llt.solve(loadings_h).transpose();      // H_t Lambda' Theta_t^{-1}

  FactorConditional out;
  out.mean = upsilon * eps;
  Eigen::MatrixXd cov = Eigen::MatrixXd(factor_var.asDiagonal()) - upsilon * theta * upsilon.transpose();
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

Eigen::MatrixXd sample_factors_path(const Eigen::MatrixXd& loadings, const Eigen::MatrixXd& log_vol_factors,
                                    const Eigen::MatrixXd& log_vol_idio, const Eigen::MatrixXd& residuals, Rng& rng) {
  const Eigen::Index t_count = residuals.rows();
  const Eigen::Index f = loadings.cols();
  require(log_vol_factors.rows() == t_count && log_vol_factors.cols() == f && log_vol_idio.rows() == t_count &&
              log_vol_idio.cols() == loadings.rows() && residuals.cols() == loadings.rows(),
          "sample_factors_path: dimension mismatch");
  Eigen::MatrixXd out(t_count, f);
  if (f == 0) return out;
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const Eigen::VectorXd h = log_vol_factors.row(t).transpose();
    const Eigen::MatrixXd theta = assemble_theta(loadings, h, log_vol_idio.row(t).transpose());
    const FactorConditional cond =
        factor_conditional(loadings, h.array().exp().matrix(), theta, residuals.row(t).transpose());
    const auto llt = robust_llt(cond.covariance, "factor conditional covariance P_t");
    const Eigen::VectorXd z = rng.normal_vector(f);
    out.row(t) = (cond.mean + llt.matrixL() * z).transpose();
  }
  if (!out.allFinite()) throw NumericalError("sample_factors_path: non-finite factor draw");
  return out;
}

Eigen::MatrixXd sample_loadings(const Eigen::MatrixXd& residuals, const Eigen::MatrixXd& factors,
                                const Eigen::MatrixXd& log_vol_idio, const PriorConfig& prior, Rng& rng) {
  const Eigen::Index l = residuals.cols();
  const Eigen::Index f = factors.cols();
  require(factors.rows() == residuals.rows() && log_vol_idio.rows() == residuals.rows() && log_vol_idio.cols() == l,
          "sample_loadings: dimension mismatch");
  Eigen::MatrixXd out(l, f);
  if (f == 0) return out;
  const Eigen::VectorXd prior_mean = Eigen::VectorXd::Zero(f);
  const Eigen::VectorXd prior_var = Eigen::VectorXd::Constant(f, prior.loading_var);
  for (Eigen::Index r = 0; r < l; ++r) {
    const Eigen::VectorXd noise = log_vol_idio.col(r).array().exp().matrix();
    const GaussianConditional cond =
        regression_conditional(factors, residuals.col(r), noise, prior_mean, prior_var, "loadings row");
    out.row(r) = cond.draw(rng).transpose();
  }
  return out;
}

Eigen::VectorXd log_square(const Eigen::VectorXd& series) {
  return (series.array().square() + kLogSquareOffset).log().matrix();
}

Eigen::VectorXi sample_mixture_indicators(const Eigen::VectorXd& log_sq, const Eigen::VectorXd& path, Rng& rng) {
  using Mix = LogChiSquareMixture;
  require(log_sq.size() == path.size(), "sample_mixture_indicators: length mismatch");
  std::array<double, Mix::kComponents> log_norm{};
  for (int c = 0; c < Mix::kComponents; ++c) log_norm[c] = std::log(Mix::weight[c]) - 0.5 * std::log(Mix::variance[c]);

  Eigen::VectorXi out(log_sq.size());
  std::array<double, Mix::kComponents> lw{};
  for (Eigen::Index t = 0; t < log_sq.size(); ++t) {
    const double resid = log_sq(t) - path(t);
    double max_lw = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < Mix::kComponents; ++c) {
      const double d = resid - Mix::mean[c];
      lw[c] = log_norm[c] - 0.5 * d * d / Mix::variance[c];
      max_lw = std::max(max_lw, lw[c]);
    }
    double total = 0.0;
    for (int c = 0; c < Mix::kComponents; ++c) {
      lw[c] = std::exp(lw[c] - max_lw);
      total += lw[c];
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int chosen = Mix::kComponents - 1;
    for (int c = 0; c < Mix::kComponents; ++c) {
      acc += lw[c];
      if (u <= acc) {
        chosen = c;
        break;
      }
    }
    out(t) = chosen;
  }
  return out;
}

Eigen::VectorXd sample_log_vol_path(const Eigen::VectorXd& log_sq, const Eigen::VectorXi& indicators,
                                    const SvParams& params, Rng& rng) {
  using Mix = LogChiSquareMixture;
  const Eigen::Index n = log_sq.size();
  require(indicators.size() == n && n >= 1, "sample_log_vol_path: length mismatch");
  const double phi = params.level;
  const double rho = params.persistence;
  const double s2 = params.innovation_var;

  Eigen::VectorXd filt_mean(n);
  Eigen::VectorXd filt_var(n);
  double pred_mean = phi;
  double pred_var = s2 / (1.0 - rho * rho);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int c = indicators(t);
    const double obs = log_sq(t) - Mix::mean[c];
    const double gain = pred_var / (pred_var + Mix::variance[c]);
    filt_mean(t) = pred_mean + gain * (obs - pred_mean);
    filt_var(t) = pred_var * (1.0 - gain);
    pred_mean = phi + rho * (filt_mean(t) - phi);
    pred_var = rho * rho * filt_var(t) + s2;
  }

  Eigen::VectorXd h(n);
  h(n - 1) = filt_mean(n - 1) + std::sqrt(filt_var(n - 1)) * rng.normal();
  for (Eigen::Index t = n - 2; t >= 0; --t) {
    const double next_var = rho * rho * filt_var(t) + s2;
    const double gain = filt_var(t) * rho / next_var;
    const double mean = filt_mean(t) + gain * (h(t + 1) - phi - rho * (filt_mean(t) - phi));
    const double var = std::max(filt_var(t) - gain * rho * filt_var(t), 0.0);
    h(t) = mean + std::sqrt(var) * rng.normal();
  }
  return h;
}

SvDraw sample_volatility_path(const Eigen::VectorXd& series, const Eigen::VectorXd& current_path,
                              const SvParams& params, const PriorConfig& prior, Rng& rng) {
  require(series.size() == current_path.size() && series.size() >= 2, "sample_volatility_path: length mismatch");
  require(series.allFinite(), "sample_volatility_path: non-finite residual series");
  require(params.valid(), "sample_volatility_path: invalid AR(1) parameters");

  const Eigen::VectorXd log_sq = log_square(series);
  const Eigen::VectorXi indicators = sample_mixture_indicators(log_sq, current_path, rng);

  SvDraw out;
  out.params = params;
  out.path = sample_log_vol_path(log_sq, indicators, out.params, rng);
  out.params.innovation_var = update_innovation_var(out.path, out.params, prior, rng);
  out.params = update_level_persistence(out.path, out.params, prior, rng);
  interweave(out.path, out.params, log_sq, indicators, prior, rng);

  if (!out.path.allFinite() || !out.params.valid()) {
    throw NumericalError("sample_volatility_path: non-finite or invalid draw");
  }
  return out;
}

}  // namespace gvarfsv
