#include "gvarfsv/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gvarfsv/csv.hpp"
#include "gvarfsv/errors.hpp"
#include "gvarfsv/posterior_store.hpp"
#include "gvarfsv/regression.hpp"
#include "gvarfsv/sampler.hpp"
#include "gvarfsv/structural.hpp"
#include "json.hpp"

#ifndef GVARFSV_VERSION
#define GVARFSV_VERSION "0.0.0"
#endif

namespace gvarfsv {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kKnownCovariates = {"agric", "constr", "manu", "dir", "bussum", "unemp"};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.close();
  if (!out) throw IoError("error while writing " + path);
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

json sv_json(const std::vector<SvParams>& params) {
  json a = json::array();
  for (const auto& p : params) a.push_back({p.level, p.persistence, p.innovation_var});
  return a;
}

// Tracks the files a command read and wrote, for the manifest.
class Manifest {
 public:
  Manifest(std::string command, const RunConfig& config) : command_(std::move(command)), config_(config) {}

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void note(const std::string& key, json value) { summary_[key] = std::move(value); }

  void write() const {
    const std::string canonical = canonical_config_json(config_);
    json files_in = json::array();
    for (const auto& p : inputs_) files_in.push_back({{"path", p}, {"fnv1a64", file_hash(p)}});
    json files_out = json::array();
    for (const auto& p : outputs_) files_out.push_back({{"path", p}, {"fnv1a64", file_hash(p)}});
    json m = {{"command", command_},
              {"version", GVARFSV_VERSION},
              {"seed", command_ == "simulate" ? config_.simulate.seed : config_.sampler.seed},
              {"config_hash", hex64(fnv1a64(canonical))},
              {"config", json::parse(canonical)},
              {"inputs", files_in},
              {"outputs", files_out}};
    if (!summary_.empty()) m["summary"] = summary_;
    write_text((fs::path(config_.output_dir) / (command_ + "_manifest.json")).string(), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  const RunConfig& config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  json summary_ = json::object();
};

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.output_dir) / name).string(); }

void ensure_output_dir(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + c.output_dir + ": " + ec.message());
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw IoError(what + " not found: " + path);
}

// Variable lists in order of first appearance when the config leaves them empty.
PanelSchema panel_schema(const RunConfig& c, const std::string& path) {
  PanelSchema schema;
  schema.national_label = c.data.national_label;
  schema.permissive = c.data.permissive;
  schema.region_variables = c.data.region_variables;
  schema.national_variables = c.data.national_variables;
  if (schema.region_variables.empty() || schema.national_variables.empty()) {
    const CsvTable t = read_csv(path);
    const int c_region = t.require_column("region", path);
    const int c_var = t.require_column("variable", path);
    std::vector<std::string> rv;
    std::vector<std::string> nv;
    for (const auto& row : t.rows) {
      auto& list = row[c_region] == schema.national_label ? nv : rv;
      if (std::find(list.begin(), list.end(), row[c_var]) == list.end()) list.push_back(row[c_var]);
    }
    if (schema.region_variables.empty()) schema.region_variables = rv;
    if (schema.national_variables.empty()) schema.national_variables = nv;
  }
  return schema;
}

WeightMatrix weights_for(const RunConfig& c, const std::vector<std::string>& regions, Manifest& manifest) {
  if (regions.size() == 1) return WeightMatrix::single_region();
  const std::string path = c.resolve(c.data.centroids, "centroids.csv");
  require_file(path, "centroid file");
  manifest.input(path);
  return inverse_distance_weights(read_centroids_csv(path, regions, c.data.permissive));
}

void cmd_simulate(const RunConfig& c) {
  Manifest manifest("simulate", c);
  ModelDims dims;
  dims.regions = c.model.regions;
  dims.vars_per_region = c.model.vars_per_region;
  dims.national_vars = c.model.national_vars;
  dims.domestic_lags = c.model.domestic_lags;
  dims.foreign_lags = c.model.foreign_lags;
  dims.factors = c.model.factors;
  dims.periods = c.model.periods;
  dims.validate();

  const std::uint64_t seed = c.simulate.seed;
  const Centroids centroids = synth_centroids(dims.regions, seed);
  const WeightMatrix w = dims.regions == 1 ? WeightMatrix::single_region() : inverse_distance_weights(centroids);
  const SyntheticTruth truth = make_truth(dims, w, seed);
  SynthOptions options;
  options.zero_noise = c.simulate.zero_noise;
  const SyntheticPanel sim = synth_generate(truth, w, seed, options);

  const auto first = Quarter::parse(sim.panel.periods.front());
  const auto last = Quarter::parse(sim.panel.periods.back());
  const auto survey =
      synth_survey(sim.panel.region_names, first.year, last.year, c.simulate.survey_households, seed);
  const auto covariates = synth_covariates(sim.panel.region_names, seed);

  const std::vector<std::pair<std::string, std::function<void(const std::string&)>>> artifacts = {
      {"panel.csv", [&](const std::string& p) { write_panel_csv(p, sim.panel, c.data.national_label); }},
      {"centroids.csv", [&](const std::string& p) { write_centroids_csv(p, centroids); }},
      {"covariates.csv", [&](const std::string& p) { write_covariates_csv(p, covariates); }},
      {"survey.csv", [&](const std::string& p) { write_survey_csv(p, survey); }},
      {"truth.json", [&](const std::string& p) { write_truth_json(p, sim.truth, seed); }},
  };
  for (const auto& [name, writer] : artifacts) {
    const std::string p = out_path(c, name);
    writer(p);
    manifest.output(p);
  }
  manifest.note("spectral_radius",
                spectral_radius(stack_global_system(w, truth.regions, truth.national, dims).companion()));
  manifest.write();
}

struct LoadedPanel {
  PanelDataset panel;
  WeightMatrix weights;
};

LoadedPanel load_panel(const RunConfig& c, Manifest& manifest) {
  const std::string path = c.resolve(c.data.panel, "panel.csv");
  require_file(path, "panel file");
  manifest.input(path);
  const RawPanel raw = read_panel_csv(path, panel_schema(c, path));
  LoadedPanel out;
  out.panel = apply_transforms(raw, c.data.transforms);
  out.weights = weights_for(c, out.panel.region_names, manifest);
  return out;
}

void cmd_estimate(const RunConfig& c) {
  Manifest manifest("estimate", c);
  const LoadedPanel in = load_panel(c, manifest);
  ModelDims dims;
  dims.regions = in.panel.region_count();
  dims.vars_per_region = in.panel.vars_per_region();
  dims.national_vars = in.panel.national_count();
  dims.domestic_lags = c.model.domestic_lags;
  dims.foreign_lags = c.model.foreign_lags;
  dims.factors = c.model.factors;
  dims.periods = in.panel.periods_count();
  dims.validate();

  const PosteriorStore store = run_gibbs(in.panel, in.weights, dims, c.prior, c.sampler);
  const std::string path = out_path(c, "posterior.ndjson");
  save_posterior(path, store);
  manifest.output(path);
  manifest.note("retained_draws", store.draws.size());
  json log = json::array();
  for (const auto& e : in.panel.transform_log) log.push_back(e);
  manifest.note("transform_log", log);
  manifest.write();
}

struct StructuralRun {
  PosteriorStore store;
  StructuralResult result;
  std::vector<std::string> row_region;    // per global variable
  std::vector<std::string> row_variable;
};

StructuralRun run_structural(const RunConfig& c, Manifest& manifest) {
  const std::string path = out_path(c, "posterior.ndjson");
  require_file(path, "posterior store (run estimate first)");
  manifest.input(path);
  StructuralRun run;
  run.store = load_posterior(path);
  require(run.store.draws.size() >= 2, "structural analysis needs at least 2 retained draws");
  const WeightMatrix w = weights_for(c, run.store.region_names, manifest);

  StructuralOptions options;
  options.horizon = c.structural.horizon;
  options.rescale_impact = c.structural.rescale_impact;
  options.threads = c.sampler.threads;
  if (c.structural.covariance == "date") {
    options.covariance = CovarianceChoice::kDate;
    const auto& periods = run.store.periods;
    const auto it = std::find(periods.begin(), periods.end(), c.structural.date);
    if (it == periods.end()) throw InputError("structural.date " + c.structural.date + " is not a sample period");
    options.date_index = static_cast<int>(it - periods.begin()) - run.store.dims.max_lag();
    if (options.date_index < 0) {
      throw InputError("structural.date " + c.structural.date + " falls in the pre-sample lags");
    }
    if (!run.store.sampler.store_paths) {
      throw InputError("structural.covariance \"date\" needs a posterior estimated with store_paths");
    }
  }
  run.result = compute_structural(run.store, w, options);
  manifest.note("explosive_draws", run.result.explosive_draws);

  const ModelDims& d = run.store.dims;
  for (int j = 0; j < d.national_vars; ++j) {
    run.row_region.push_back(c.data.national_label);
    run.row_variable.push_back(run.store.national_variables[j]);
  }
  for (int i = 0; i < d.regions; ++i) {
    for (int j = 0; j < d.vars_per_region; ++j) {
      run.row_region.push_back(run.store.region_names[i]);
      run.row_variable.push_back(run.store.region_variables[j]);
    }
  }
  return run;
}

void write_quantile_csv(const std::string& path, const StructuralRun& run, const QuantileSummary& q,
                        const std::string& kind) {
  std::ostringstream out;
  out << "region,variable,shock,horizon,q16,q50,q84,kind\n";
  const std::string& shock = run.store.national_variables.front();
  for (Eigen::Index v = 0; v < q.q50.rows(); ++v) {
    for (Eigen::Index h = 0; h < q.q50.cols(); ++h) {
      out << csv_escape(run.row_region[v]) << ',' << csv_escape(run.row_variable[v]) << ',' << csv_escape(shock)
          << ',' << h << ',' << format_double(q.q16(v, h)) << ',' << format_double(q.q50(v, h)) << ','
          << format_double(q.q84(v, h)) << ',' << kind << '\n';
    }
  }
  write_text(path, out.str());
}

void cmd_irf(const RunConfig& c) {
  Manifest manifest("irf", c);
  const StructuralRun run = run_structural(c, manifest);
  const std::string path = out_path(c, "irf.csv");
  write_quantile_csv(path, run, run.result.irf_quantiles, "irf");
  manifest.output(path);
  manifest.write();
}

void cmd_fevd(const RunConfig& c) {
  Manifest manifest("fevd", c);
  const StructuralRun run = run_structural(c, manifest);
  const std::string path = out_path(c, "fevd.csv");
  write_quantile_csv(path, run, run.result.fevd_quantiles, "fevd");
  manifest.output(path);

  // Posterior-mean shares over every shock; each (variable, horizon) sums to one.
  std::ostringstream out;
  out << "region,variable,shock_region,shock_variable,horizon,share\n";
  const Array3& m = run.result.fevd_mean;
  for (int v = 0; v < m.dim0(); ++v) {
    for (int h = 0; h < m.dim2(); ++h) {
      for (int s = 0; s < m.dim1(); ++s) {
        out << csv_escape(run.row_region[v]) << ',' << csv_escape(run.row_variable[v]) << ','
            << csv_escape(run.row_region[s]) << ',' << csv_escape(run.row_variable[s]) << ',' << h << ','
            << format_double(m(v, s, h)) << '\n';
      }
    }
  }
  const std::string mean_path = out_path(c, "fevd_mean.csv");
  write_text(mean_path, out.str());
  manifest.output(mean_path);
  manifest.write();
}

int response_variable_index(const RunConfig& c, const PosteriorStore& store) {
  if (c.structural.response_variable.empty()) return 0;
  const auto& vars = store.region_variables;
  const auto it = std::find(vars.begin(), vars.end(), c.structural.response_variable);
  if (it == vars.end()) {
    throw InputError("structural.response_variable '" + c.structural.response_variable +
                     "' is not a region variable");
  }
  return static_cast<int>(it - vars.begin());
}

std::vector<RegionBand> response_bands(const StructuralRun& run, int var) {
  const ModelDims& d = run.store.dims;
  const QuantileSummary& q = run.result.irf_quantiles;
  std::vector<RegionBand> bands;
  for (int i = 0; i < d.regions; ++i) {
    const int row = d.global_index(i, var);
    bands.push_back(RegionBand{q.q16.row(row).transpose(), q.q50.row(row).transpose(), q.q84.row(row).transpose()});
  }
  return bands;
}

void cmd_classify(const RunConfig& c) {
  Manifest manifest("classify", c);
  const StructuralRun run = run_structural(c, manifest);
  const int var = response_variable_index(c, run.store);
  ClassificationThresholds thresholds;
  const auto cls =
      peak_and_classify(response_bands(run, var), c.structural.upper_frac, c.structural.lower_frac, &thresholds);
  std::ostringstream out;
  out << "region,peak_value,peak_horizon,class\n";
  for (std::size_t i = 0; i < cls.size(); ++i) {
    out << csv_escape(run.store.region_names[i]) << ',' << format_double(cls[i].peak_value) << ','
        << cls[i].peak_horizon << ',' << csv_escape(to_string(cls[i].cls)) << '\n';
  }
  const std::string path = out_path(c, "classification.csv");
  write_text(path, out.str());
  manifest.output(path);
  manifest.note("upper_threshold", thresholds.upper);
  manifest.note("lower_threshold", thresholds.lower);
  manifest.note("response_variable", run.store.region_variables[var]);
  manifest.write();
}

void cmd_regress(const RunConfig& c) {
  Manifest manifest("regress", c);
  const StructuralRun run = run_structural(c, manifest);
  const int var = response_variable_index(c, run.store);
  const auto bands = response_bands(run, var);
  const int n = static_cast<int>(bands.size());
  Eigen::VectorXd y(n);
  if (c.regression.horizon < 0) {
    const auto cls = peak_and_classify(bands, c.structural.upper_frac, c.structural.lower_frac);
    for (int i = 0; i < n; ++i) y(i) = cls[i].peak_value;
  } else {
    if (c.regression.horizon > c.structural.horizon) {
      throw InputError("regression.horizon exceeds structural.horizon");
    }
    for (int i = 0; i < n; ++i) y(i) = bands[i].q50(c.regression.horizon);
  }
  const std::string cov_path = c.resolve(c.data.covariates, "covariates.csv");
  require_file(cov_path, "covariate file");
  manifest.input(cov_path);
  const Eigen::MatrixXd x =
      read_covariates_csv(cov_path, run.store.region_names, c.regression.covariates, c.data.permissive);
  const RegressionResult r = ols_regress(y, x, c.regression.covariates);

  std::ostringstream out;
  out << "term,coef,std_error,t_stat,p_value,stars\n";
  for (const auto& t : r.terms) {
    out << csv_escape(t.name) << ',' << format_double(t.coef) << ',' << format_double(t.std_error) << ','
        << format_double(t.t_stat) << ',' << format_double(t.p_value) << ',' << t.stars << '\n';
  }
  const std::string path = out_path(c, "regression.csv");
  write_text(path, out.str());
  manifest.output(path);

  std::ostringstream fit;
  fit << "statistic,value\n"
      << "r_squared," << format_double(r.r_squared) << '\n'
      << "observations," << r.observations << '\n'
      << "dof," << r.dof << '\n'
      << "horizon," << c.regression.horizon << '\n';
  const std::string fit_path = out_path(c, "regression_fit.csv");
  write_text(fit_path, fit.str());
  manifest.output(fit_path);
  manifest.write();
}

void cmd_gini(const RunConfig& c) {
  Manifest manifest("gini", c);
  const std::string path = c.resolve(c.data.survey, "survey.csv");
  require_file(path, "survey file");
  manifest.input(path);
  const auto records = read_survey_csv(path, c.data.permissive);
  require(!records.empty(), path + ": no survey records");
  const auto annual = gini_by_region_year(records);

  std::ostringstream a;
  a << "region,year,gini\n";
  std::ostringstream q;
  q << "region,period,gini\n";
  for (const auto& [region, years] : annual) {
    for (const auto& [year, g] : years) a << csv_escape(region) << ',' << year << ',' << format_double(g) << '\n';
    const QuarterlySeries s = annual_to_quarterly_spline(years);
    for (std::size_t t = 0; t < s.values.size(); ++t) {
      q << csv_escape(region) << ',' << Quarter::from_index(s.first.index() + static_cast<int>(t)).label() << ','
        << format_double(s.values[t]) << '\n';
    }
  }
  const std::string annual_path = out_path(c, "gini_annual.csv");
  const std::string quarterly_path = out_path(c, "gini_quarterly.csv");
  write_text(annual_path, a.str());
  write_text(quarterly_path, q.str());
  manifest.output(annual_path);
  manifest.output(quarterly_path);
  manifest.write();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

void write_panel_csv(const std::string& path, const PanelDataset& panel, const std::string& national_label) {
  std::ostringstream out;
  out << "region,variable,period,value\n";
  const int t_count = panel.periods_count();
  for (int j = 0; j < panel.national_count(); ++j) {
    for (int t = 0; t < t_count; ++t) {
      out << csv_escape(national_label) << ',' << csv_escape(panel.national_variables[j]) << ','
          << panel.periods[t] << ',' << format_double(panel.national(t, j)) << '\n';
    }
  }
  for (int i = 0; i < panel.region_count(); ++i) {
    for (int j = 0; j < panel.vars_per_region(); ++j) {
      for (int t = 0; t < t_count; ++t) {
        out << csv_escape(panel.region_names[i]) << ',' << csv_escape(panel.region_variables[j]) << ','
            << panel.periods[t] << ',' << format_double(panel.regional(t, i, j)) << '\n';
      }
    }
  }
  write_text(path, out.str());
}

void write_centroids_csv(const std::string& path, const Centroids& c) {
  std::ostringstream out;
  out << "region,x,y,convention\n";
  const char* conv = c.convention == CoordinateConvention::kPlanar ? "planar" : "spherical";
  for (std::size_t i = 0; i < c.coords.size(); ++i) {
    out << csv_escape(c.regions[i]) << ',' << format_double(c.coords[i].x()) << ','
        << format_double(c.coords[i].y()) << ',' << conv << '\n';
  }
  write_text(path, out.str());
}

void write_covariates_csv(const std::string& path, const RegionCovariates& c) {
  std::ostringstream out;
  out << "region";
  for (const auto& n : c.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < c.regions.size(); ++i) {
    out << csv_escape(c.regions[i]);
    for (Eigen::Index j = 0; j < c.values.cols(); ++j) out << ',' << format_double(c.values(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

void write_survey_csv(const std::string& path, const std::vector<HouseholdRecord>& records) {
  std::ostringstream out;
  out << "income,size,weight,year,region\n";
  for (const auto& r : records) {
    out << format_double(r.income) << ',' << r.household_size << ',' << format_double(r.weight) << ',' << r.year
        << ',' << csv_escape(r.region) << '\n';
  }
  write_text(path, out.str());
}

void write_truth_json(const std::string& path, const SyntheticTruth& truth, std::uint64_t seed) {
  const ModelDims& d = truth.dims;
  json regions = json::array();
  for (const auto& r : truth.regions) regions.push_back(to_json(r.pack()));
  json j = {{"seed", seed},
            {"dims",
             {{"regions", d.regions},
              {"vars_per_region", d.vars_per_region},
              {"national_vars", d.national_vars},
              {"domestic_lags", d.domestic_lags},
              {"foreign_lags", d.foreign_lags},
              {"factors", d.factors},
              {"periods", d.periods}}},
            {"mu", to_json(truth.hierarchy.mean)},
            {"v", to_json(truth.hierarchy.variance)},
            {"regions", regions},
            {"national", to_json(truth.national.pack())},
            {"loadings", to_json(truth.loadings)},
            {"sv_factors", sv_json(truth.sv_factors)},
            {"sv_idio", sv_json(truth.sv_idio)}};
  write_text(path, j.dump(1) + "\n");
}

Eigen::MatrixXd read_covariates_csv(const std::string& path, const std::vector<std::string>& regions,
                                    const std::vector<std::string>& names, bool permissive) {
  const CsvTable t = read_csv(path);
  std::vector<std::string> required{"region"};
  required.insert(required.end(), names.begin(), names.end());
  std::vector<std::string> known = required;
  known.insert(known.end(), kKnownCovariates.begin(), kKnownCovariates.end());
  check_columns(t, required, known, permissive, path);
  const int c_region = t.column("region");
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (!row_of.emplace(t.rows[r][c_region], r).second) {
      throw InputError(path + ": duplicate region '" + t.rows[r][c_region] + "'");
    }
  }
  Eigen::MatrixXd x(regions.size(), names.size());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto it = row_of.find(regions[i]);
    if (it == row_of.end()) throw InputError(path + ": no covariates for region '" + regions[i] + "'");
    for (std::size_t j = 0; j < names.size(); ++j) {
      x(i, j) = parse_double(t.rows[it->second][t.column(names[j])], path + " region " + regions[i]);
    }
  }
  return x;
}

void run_command(const std::string& command, const RunConfig& config) {
  ensure_output_dir(config);
  if (command == "simulate") return cmd_simulate(config);
  if (command == "estimate") return cmd_estimate(config);
  if (command == "irf") return cmd_irf(config);
  if (command == "fevd") return cmd_fevd(config);
  if (command == "classify") return cmd_classify(config);
  if (command == "gini") return cmd_gini(config);
  if (command == "regress") return cmd_regress(config);
  throw ConfigError({"unknown command '" + command + "'"});
}

}  // namespace gvarfsv
