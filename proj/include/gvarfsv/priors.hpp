#pragma once

#include <cstdint>

namespace gvarfsv {

struct PriorConfig {
  double common_mean_var = 10.0;     // mu ~ N(0, common_mean_var I)
  double variance_shape = 0.01;      // v_j ~ InvGamma(variance_shape, variance_scale)
  double variance_scale = 0.01;
  double national_coef_var = 10.0;   // D_p, S_q entries ~ N(0, national_coef_var)
  double loading_var = 100.0;        // Lambda entries ~ N(0, loading_var)
  double sv_mean_var = 100.0;        // phi ~ N(0, sv_mean_var)
  double sv_sigma_shape = 0.5;       // sigma^2 ~ Gamma(shape, rate)
  double sv_sigma_rate = 0.5;
  double sv_rho_a = 25.0;            // (rho + 1) / 2 ~ Beta(a, b)
  double sv_rho_b = 5.0;

  void validate() const;
};

struct SamplerConfig {
  int total_iterations = 10000;
  int burn_in = 5000;
  int thin = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  bool national_intercept = false;
  // When false, per-draw latent paths are dropped from the store; only their
  // time-averaged variances are kept.
  bool store_paths = true;

  int retained_draws() const noexcept {
    return total_iterations <= burn_in ? 0 : (total_iterations - burn_in + thin - 1) / thin;
  }
  void validate() const;
};

}  // namespace gvarfsv
