#include "gvarfsv/posterior_store.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gvarfsv/errors.hpp"

namespace gvarfsv {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "gvarfsv-posterior";
constexpr int kVersion = 1;

json vec_json(const Eigen::MatrixXd& m) {
  return json(std::vector<double>(m.data(), m.data() + m.size()));
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw IoError(std::string("posterior record: block '") + what + "' has " + std::to_string(v.size()) +
                  " values, expected " + std::to_string(rows * cols));
  }
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

json sv_json(const std::vector<SvParams>& ps) {
  json arr = json::array();
  for (const auto& p : ps) arr.push_back({p.level, p.persistence, p.innovation_var});
  return arr;
}

std::vector<SvParams> sv_from(const json& j) {
  std::vector<SvParams> out;
  for (const auto& e : j) out.push_back(SvParams{e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()});
  return out;
}

json header_json(const PosteriorStore& s) {
  const ModelDims& d = s.dims;
  const PriorConfig& p = s.prior;
  const SamplerConfig& c = s.sampler;
  return json{
      {"format", kFormat},
      {"version", kVersion},
      {"dims",
       {{"regions", d.regions},
        {"vars_per_region", d.vars_per_region},
        {"national_vars", d.national_vars},
        {"domestic_lags", d.domestic_lags},
        {"foreign_lags", d.foreign_lags},
        {"factors", d.factors},
        {"periods", d.periods}}},
      {"prior",
       {{"common_mean_var", p.common_mean_var},
        {"variance_shape", p.variance_shape},
        {"variance_scale", p.variance_scale},
        {"national_coef_var", p.national_coef_var},
        {"loading_var", p.loading_var},
        {"sv_mean_var", p.sv_mean_var},
        {"sv_sigma_shape", p.sv_sigma_shape},
        {"sv_sigma_rate", p.sv_sigma_rate},
        {"sv_rho_a", p.sv_rho_a},
        {"sv_rho_b", p.sv_rho_b}}},
      {"sampler",
       {{"iterations", c.total_iterations},
        {"burn_in", c.burn_in},
        {"thin", c.thin},
        {"seed", c.seed},
        {"national_intercept", c.national_intercept},
        {"store_paths", c.store_paths}}},
      {"labels",
       {{"regions", s.region_names},
        {"region_variables", s.region_variables},
        {"national_variables", s.national_variables},
        {"periods", s.periods}}},
      {"layout",
       {"iteration", "regions", "national", "mu", "v", "loadings", "sv_factors", "sv_idio", "mean_factor_var",
        "mean_idio_var", "factors", "log_vol_factors", "log_vol_idio"}},
  };
}

}  // namespace

void write_posterior(std::ostream& out, const PosteriorStore& store) {
  out << header_json(store).dump() << '\n';
  for (const auto& d : store.draws) {
    const ParameterState& s = d.state;
    json regions = json::array();
    for (const auto& r : s.regions) regions.push_back(vec_json(r.pack()));
    json rec{
        {"iteration", d.iteration},
        {"regions", regions},
        {"national", vec_json(s.national.pack())},
        {"mu", vec_json(s.hierarchy.mean)},
        {"v", vec_json(s.hierarchy.variance)},
        {"loadings", vec_json(s.loadings)},
        {"sv_factors", sv_json(s.sv_factors)},
        {"sv_idio", sv_json(s.sv_idio)},
        {"mean_factor_var", vec_json(d.mean_factor_var)},
        {"mean_idio_var", vec_json(d.mean_idio_var)},
        {"factors", vec_json(s.factors)},
        {"log_vol_factors", vec_json(s.log_vol_factors)},
        {"log_vol_idio", vec_json(s.log_vol_idio)},
    };
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("failed writing posterior store");
}

PosteriorStore read_posterior(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("posterior store is empty");
  PosteriorStore s;
  try {
    const json h = json::parse(line);
    if (h.at("format") != kFormat || h.at("version") != kVersion) {
      throw IoError("unsupported posterior store format");
    }
    const json& d = h.at("dims");
    s.dims.regions = d.at("regions");
    s.dims.vars_per_region = d.at("vars_per_region");
    s.dims.national_vars = d.at("national_vars");
    s.dims.domestic_lags = d.at("domestic_lags");
    s.dims.foreign_lags = d.at("foreign_lags");
    s.dims.factors = d.at("factors");
    s.dims.periods = d.at("periods");
    const json& p = h.at("prior");
    s.prior.common_mean_var = p.at("common_mean_var");
    s.prior.variance_shape = p.at("variance_shape");
    s.prior.variance_scale = p.at("variance_scale");
    s.prior.national_coef_var = p.at("national_coef_var");
    s.prior.loading_var = p.at("loading_var");
    s.prior.sv_mean_var = p.at("sv_mean_var");
    s.prior.sv_sigma_shape = p.at("sv_sigma_shape");
    s.prior.sv_sigma_rate = p.at("sv_sigma_rate");
    s.prior.sv_rho_a = p.at("sv_rho_a");
    s.prior.sv_rho_b = p.at("sv_rho_b");
    const json& c = h.at("sampler");
    s.sampler.total_iterations = c.at("iterations");
    s.sampler.burn_in = c.at("burn_in");
    s.sampler.thin = c.at("thin");
    s.sampler.seed = c.at("seed");
    s.sampler.national_intercept = c.at("national_intercept");
    s.sampler.store_paths = c.at("store_paths");
    const json& labels = h.at("labels");
    s.region_names = labels.at("regions").get<std::vector<std::string>>();
    s.region_variables = labels.at("region_variables").get<std::vector<std::string>>();
    s.national_variables = labels.at("national_variables").get<std::vector<std::string>>();
    if (labels.contains("periods")) s.periods = labels.at("periods").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw IoError(std::string("posterior header: ") + e.what());
  }

  const ModelDims& dims = s.dims;
  const int l_total = dims.shock_dim();
  const int f = dims.factors;
  const int t_eff = s.sampler.store_paths ? dims.effective_periods() : 0;
  const int national_cols = dims.domestic_lags * dims.national_vars + dims.foreign_lags * dims.vars_per_region +
                            (s.sampler.national_intercept ? 1 : 0);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json r = json::parse(line);
      StoredDraw d;
      d.iteration = r.at("iteration");
      for (const auto& b : r.at("regions")) {
        d.state.regions.push_back(
            RegionCoefficients::unpack(matrix_from(b, dims.coefs_per_region(), 1, "regions"), dims));
      }
      if (static_cast<int>(d.state.regions.size()) != dims.regions) throw IoError("wrong number of region blocks");
      d.state.national = NationalCoefficients::from_matrix(
          matrix_from(r.at("national"), dims.national_vars, national_cols, "national"), dims.domestic_lags,
          dims.foreign_lags, dims.vars_per_region, s.sampler.national_intercept);
      d.state.hierarchy.mean = matrix_from(r.at("mu"), dims.coefs_per_region(), 1, "mu");
      d.state.hierarchy.variance = matrix_from(r.at("v"), dims.coefs_per_region(), 1, "v");
      d.state.loadings = matrix_from(r.at("loadings"), l_total, f, "loadings");
      d.state.sv_factors = sv_from(r.at("sv_factors"));
      d.state.sv_idio = sv_from(r.at("sv_idio"));
      d.mean_factor_var = matrix_from(r.at("mean_factor_var"), f, 1, "mean_factor_var");
      d.mean_idio_var = matrix_from(r.at("mean_idio_var"), l_total, 1, "mean_idio_var");
      d.state.factors = matrix_from(r.at("factors"), t_eff, f, "factors");
      d.state.log_vol_factors = matrix_from(r.at("log_vol_factors"), t_eff, f, "log_vol_factors");
      d.state.log_vol_idio = matrix_from(r.at("log_vol_idio"), t_eff, l_total, "log_vol_idio");
      s.draws.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw IoError("posterior record on line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw IoError("posterior record on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return s;
}

void save_posterior(const std::string& path, const PosteriorStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_posterior(out, store);
}

PosteriorStore load_posterior(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_posterior(in);
}

}  // namespace gvarfsv
