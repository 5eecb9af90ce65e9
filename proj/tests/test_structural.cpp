#include <cmath>

#include "doctest.h"
#include "gvarfsv/errors.hpp"
#include "gvarfsv/structural.hpp"
#include "gvarfsv/synth.hpp"
#include "support.hpp"

using namespace gvarfsv;
using testing::TestRandom;

namespace {

GlobalSystem make_system(std::vector<Eigen::MatrixXd> transitions) {
  GlobalSystem s;
  s.intercept = Eigen::VectorXd::Zero(transitions.front().rows());
  s.transitions = std::move(transitions);
  return s;
}

// Stable random VAR: the induced infinity norms of the lag matrices sum to 0.85.
GlobalSystem random_stable_system(TestRandom& r, int n, int order) {
  std::vector<Eigen::MatrixXd> g;
  for (int m = 0; m < order; ++m) g.push_back(r.matrix(n, n));
  double norm = 0.0;
  for (const auto& a : g) norm += a.cwiseAbs().rowwise().sum().maxCoeff();
  for (auto& a : g) a *= 0.85 / norm;
  return make_system(g);
}

// Difference between a shocked and an unshocked simulated path with common noise.
Eigen::MatrixXd two_path_response(const GlobalSystem& s, const Eigen::VectorXd& impact, int horizon, TestRandom& r) {
  const int n = s.dim();
  const int order = s.order();
  const int t0 = order;
  std::vector<Eigen::VectorXd> base(t0 + horizon + 1), shocked(t0 + horizon + 1);
  for (int t = 0; t < t0; ++t) base[t] = shocked[t] = r.vector(n);
  for (int t = t0; t <= t0 + horizon; ++t) {
    const Eigen::VectorXd noise = r.vector(n);
    base[t] = noise;
    shocked[t] = noise;
    if (t == t0) shocked[t] += impact;
    for (int m = 1; m <= order; ++m) {
      base[t] += s.transitions[m - 1] * base[t - m];
      shocked[t] += s.transitions[m - 1] * shocked[t - m];
    }
  }
  Eigen::MatrixXd out(horizon + 1, n);
  for (int h = 0; h <= horizon; ++h) out.row(h) = (shocked[t0 + h] - base[t0 + h]).transpose();
  return out;
}

RegionBand flat_band(double median, double half_width, int horizons = 3) {
  RegionBand b;
  b.q50 = Eigen::VectorXd::Zero(horizons);
  b.q50(1) = median;
  b.q16 = b.q50.array() - half_width;
  b.q84 = b.q50.array() + half_width;
  return b;
}

PosteriorStore store_from_truth(const SyntheticTruth& truth, int copies) {
  PosteriorStore store;
  store.dims = truth.dims;
  for (int c = 0; c < copies; ++c) {
    StoredDraw d;
    d.iteration = c;
    d.state.regions = truth.regions;
    d.state.national = truth.national;
    d.state.hierarchy = truth.hierarchy;
    d.state.loadings = truth.loadings;
    d.state.log_vol_factors = truth.log_vol_factors;
    d.state.log_vol_idio = truth.log_vol_idio;
    d.mean_factor_var = truth.log_vol_factors.array().exp().colwise().mean().transpose();
    d.mean_idio_var = truth.log_vol_idio.array().exp().colwise().mean().transpose();
    store.draws.push_back(std::move(d));
  }
  return store;
}

}  // namespace

TEST_CASE("cholesky identification") {
  SUBCASE("identity") {
    const auto id = identify_cholesky(Eigen::MatrixXd::Identity(4, 4));
    CHECK(id.impact().isIdentity(0.0));
  }
  SUBCASE("hand example") {
    Eigen::Matrix2d theta;
    theta << 4, 2, 2, 5;
    Eigen::Matrix2d expected;
    expected << 2, 0, 1, 2;
    CHECK((identify_cholesky(theta).impact() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("reconstruction under reordering") {
    TestRandom r(1);
    for (int rep = 0; rep < 20; ++rep) {
      const int n = r.integer(1, 8);
      const Eigen::MatrixXd theta = r.spd(n);
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), r.engine());
      const auto id = identify_cholesky(theta, order);
      const Eigen::MatrixXd b = id.impact();
      CHECK((b * b.transpose() - theta).cwiseAbs().maxCoeff() < 1e-10 * theta.cwiseAbs().maxCoeff());
      CHECK(id.lower.isLowerTriangular());
      CHECK((id.lower.diagonal().array() > 0).all());
    }
  }
  SUBCASE("failing minor is named") {
    Eigen::Matrix3d theta;
    theta << 1, 0, 0, 0, 1, 2, 0, 2, 1;
    try {
      identify_cholesky(theta);
      FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("order 3") != std::string::npos);
    }
  }
  SUBCASE("bad ordering") {
    CHECK_THROWS_AS(identify_cholesky(Eigen::MatrixXd::Identity(3, 3), {0, 0, 1}), InputError);
  }
}

TEST_CASE("impulse responses") {
  SUBCASE("no dynamics: only the impact") {
    const GlobalSystem s = make_system({Eigen::MatrixXd::Zero(3, 3)});
    const auto ir = impulse_response(s, Eigen::Vector3d(1, 2, 3), 5);
    CHECK(ir.response.row(0).transpose() == Eigen::Vector3d(1, 2, 3));
    CHECK(ir.response.bottomRows(5).isZero(0.0));
  }
  SUBCASE("scalar geometric decay") {
    const GlobalSystem s = make_system({Eigen::MatrixXd::Constant(1, 1, 0.5)});
    const auto ir = impulse_response(s, Eigen::VectorXd::Ones(1), 10);
    for (int h = 0; h <= 10; ++h) CHECK(ir.response(h, 0) == doctest::Approx(std::pow(0.5, h)).epsilon(1e-15));
    CHECK(ir.spectral_radius == doctest::Approx(0.5));
    CHECK_FALSE(ir.explosive);
  }
  SUBCASE("matches a shocked-minus-baseline simulation") {
    TestRandom r(2);
    for (int rep = 0; rep < 25; ++rep) {
      const GlobalSystem s = random_stable_system(r, r.integer(1, 6), r.integer(1, 3));
      const Eigen::VectorXd impact = r.vector(s.dim());
      const auto ir = impulse_response(s, impact, 12);
      const Eigen::MatrixXd oracle = two_path_response(s, impact, 12, r);
      CHECK((ir.response - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("linear in the impact") {
    TestRandom r(3);
    const GlobalSystem s = random_stable_system(r, 4, 2);
    const Eigen::VectorXd a = r.vector(4);
    const Eigen::VectorXd b = r.vector(4);
    const Eigen::MatrixXd lhs = impulse_response(s, 2.0 * a - 3.0 * b, 15).response;
    const Eigen::MatrixXd rhs = 2.0 * impulse_response(s, a, 15).response - 3.0 * impulse_response(s, b, 15).response;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("stable systems decay") {
    TestRandom r(4);
    for (int rep = 0; rep < 10; ++rep) {
      const GlobalSystem s = random_stable_system(r, 5, 2);
      const auto ir = impulse_response(s, r.vector(5), 60);
      CHECK(ir.spectral_radius < 1.0);
      // |x_h| <= 0.85 max(|x_{h-1}|, |x_{h-2}|) in the infinity norm.
      CHECK(ir.response.row(60).cwiseAbs().maxCoeff() <= std::pow(0.85, 30) * ir.response.row(0).cwiseAbs().maxCoeff());
    }
  }
  SUBCASE("explosive flag") {
    const GlobalSystem s = make_system({Eigen::MatrixXd::Constant(1, 1, 1.5)});
    CHECK(impulse_response(s, Eigen::VectorXd::Ones(1), 3).explosive);
  }
}

TEST_CASE("variance decomposition") {
  SUBCASE("diagonal system: each variable owns its variance") {
    const GlobalSystem s = make_system({Eigen::Vector3d(0.5, -0.2, 0.9).asDiagonal()});
    const Array3 d = fevd(s, Eigen::Vector3d(1, 2, 3).asDiagonal(), 8);
    for (int h = 0; h <= 8; ++h)
      for (int v = 0; v < 3; ++v)
        for (int sh = 0; sh < 3; ++sh) CHECK(d(v, sh, h) == (v == sh ? 1.0 : 0.0));
  }
  SUBCASE("bivariate hand example") {
    const GlobalSystem s = make_system({Eigen::MatrixXd::Zero(2, 2)});
    Eigen::Matrix2d impact;
    impact << 1, 0, 0.5, 1;
    const Array3 d = fevd(s, impact, 4);
    for (int h = 0; h <= 4; ++h) {
      CHECK(d(1, 0, h) == doctest::Approx(0.2).epsilon(1e-14));
      CHECK(d(0, 0, h) == 1.0);
    }
  }
  SUBCASE("shares sum to one and match cumulative squared responses") {
    TestRandom r(5);
    for (int rep = 0; rep < 20; ++rep) {
      const GlobalSystem s = random_stable_system(r, r.integer(2, 6), r.integer(1, 3));
      const int n = s.dim();
      const Eigen::MatrixXd impact = identify_cholesky(r.spd(n)).impact();
      const int horizon = 10;
      const Array3 d = fevd(s, impact, horizon);
      Eigen::MatrixXd cumulative = Eigen::MatrixXd::Zero(n, n);
      for (int sh = 0; sh < n; ++sh) {
        const auto ir = impulse_response(s, impact.col(sh), horizon);
        for (int h = 0; h <= horizon; ++h) {
          for (int v = 0; v < n; ++v) cumulative(v, sh) += ir.response(h, v) * ir.response(h, v);
        }
      }
      for (int v = 0; v < n; ++v) {
        double total = 0.0;
        for (int sh = 0; sh < n; ++sh) total += d(v, sh, horizon);
        CHECK(std::abs(total - 1.0) < 1e-10);
        for (int sh = 0; sh < n; ++sh)
          CHECK(std::abs(d(v, sh, horizon) - cumulative(v, sh) / cumulative.row(v).sum()) < 1e-10);
      }
    }
  }
}

TEST_CASE("quantiles") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(6));
  CHECK(quantile_linear(v, 0.5) == doctest::Approx(50.5));
  CHECK(quantile_linear(v, 0.0) == 1.0);
  CHECK(quantile_linear(v, 1.0) == 100.0);
  CHECK(quantile_linear(v, 0.16) == doctest::Approx(16.84));
  CHECK(quantile_linear({3.0}, 0.3) == 3.0);
  CHECK_THROWS_AS(quantile_linear({}, 0.5), InputError);

  TestRandom r(7);
  Array3 draws(257, 3, 4);
  for (double& x : draws.data()) x = r.normal();
  const QuantileSummary s = summarize_posterior(draws);
  CHECK((s.q16.array() <= s.q50.array()).all());
  CHECK((s.q50.array() <= s.q84.array()).all());
  std::vector<double> cell(257);
  for (int d = 0; d < 257; ++d) cell[d] = draws(d, 2, 3);
  CHECK(s.q84(2, 3) == quantile_linear(cell, 0.84));
}

TEST_CASE("classification") {
  SUBCASE("bands covering zero are insignificant") {
    std::vector<RegionBand> bands;
    for (int j = 1; j <= 6; ++j) bands.push_back(flat_band(0.1 * j * (j % 2 ? 1 : -1), 1.0));
    for (const auto& c : peak_and_classify(bands)) CHECK(c.cls == ResponseClass::kInsignificant);
  }
  SUBCASE("only the two most negative of ten are Negative") {
    std::vector<RegionBand> bands;
    for (int j = 1; j <= 10; ++j) bands.push_back(flat_band(-0.1 * j, 0.01));
    ClassificationThresholds th;
    const auto cls = peak_and_classify(bands, 0.2, 0.2, &th);
    CHECK(th.lower == doctest::Approx(-0.82));
    int negative = 0;
    for (std::size_t j = 0; j < cls.size(); ++j) {
      CHECK(cls[j].peak_horizon == 1);
      if (cls[j].cls == ResponseClass::kNegative) {
        ++negative;
        CHECK(j >= 8);
      } else {
        CHECK(cls[j].cls == ResponseClass::kSlightlyNegative);
      }
    }
    CHECK(negative == 2);
  }
  SUBCASE("peak takes the largest magnitude, earliest on ties") {
    RegionBand b;
    b.q50 = Eigen::Vector4d(0.1, -0.3, 0.3, 0.2);
    b.q16 = b.q50.array() - 0.05;
    b.q84 = b.q50.array() + 0.05;
    const auto c = peak_and_classify({b});
    CHECK(c[0].peak_horizon == 1);
    CHECK(c[0].peak_value == -0.3);
  }
  SUBCASE("invariant to a positive rescaling") {
    TestRandom r(8);
    std::vector<RegionBand> bands;
    for (int j = 0; j < 12; ++j) bands.push_back(flat_band(r.normal(), std::abs(r.normal())));
    const auto base = peak_and_classify(bands);
    for (auto& b : bands) {
      b.q16 *= 7.5;
      b.q50 *= 7.5;
      b.q84 *= 7.5;
    }
    const auto scaled = peak_and_classify(bands);
    for (std::size_t j = 0; j < bands.size(); ++j) CHECK(base[j].cls == scaled[j].cls);
  }
  SUBCASE("fractions outside (0, 1) are rejected") {
    CHECK_THROWS_AS(peak_and_classify({flat_band(1.0, 0.1)}, 0.0, 0.2), InputError);
  }
}

TEST_CASE("posterior structural summaries") {
  const ModelDims d = testing::dims(3, 2, 2, 1, 1, 1, 80);
  TestRandom r(9);
  const WeightMatrix w = r.weights(3);
  const SyntheticPanel synth = synth_generate(make_truth(d, w, 10), w, 11);
  const PosteriorStore store = store_from_truth(synth.truth, 4);

  StructuralOptions opt;
  opt.horizon = 12;
  const StructuralResult res = compute_structural(store, w, opt);
  const GlobalSystem sys = stack_global_system(w, synth.truth.regions, synth.truth.national, d);
  const auto id = identify_cholesky(draw_covariance(store.draws[0], opt));
  const auto ir = impulse_response(sys, id.impact().col(0), 12);
  const int n = d.shock_dim();
  for (int v = 0; v < n; ++v) {
    for (int h = 0; h <= 12; ++h) {
      CHECK(res.irf_quantiles.q50(v, h) == doctest::Approx(ir.response(h, v)).epsilon(1e-12));
      CHECK(res.irf_quantiles.q16(v, h) == res.irf_quantiles.q84(v, h));
      double total = 0.0;
      for (int s = 0; s < n; ++s) total += res.fevd_mean(v, s, h);
      CHECK(std::abs(total - 1.0) < 1e-10);
    }
  }
  SUBCASE("thread count does not change results") {
    opt.threads = 3;
    const StructuralResult threaded = compute_structural(store, w, opt);
    CHECK(threaded.irf.data() == res.irf.data());
    CHECK(threaded.fevd_mean.data() == res.fevd_mean.data());
  }
  SUBCASE("unit-impact rescaling") {
    opt.rescale_impact = true;
    const StructuralResult unit = compute_structural(store, w, opt);
    CHECK(unit.irf_quantiles.q50(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("date-specific covariance") {
    opt.covariance = CovarianceChoice::kDate;
    opt.date_index = 5;
    const Eigen::MatrixXd theta = draw_covariance(store.draws[0], opt);
    const Eigen::MatrixXd direct = assemble_theta(synth.truth.loadings, synth.truth.log_vol_factors.row(5).transpose(),
                                                  synth.truth.log_vol_idio.row(5).transpose());
    CHECK((theta - direct).cwiseAbs().maxCoeff() < 1e-14);
    opt.date_index = 10000;
    CHECK_THROWS_AS(compute_structural(store, w, opt), InputError);
  }
  SUBCASE("ordering must start with the uncertainty index") {
    std::vector<int> order(n);
    std::iota(order.rbegin(), order.rend(), 0);
    opt.ordering = order;
    CHECK_THROWS_AS(compute_structural(store, w, opt), InputError);
  }
}
