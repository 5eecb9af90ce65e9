#include "gvarfsv/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gvarfsv/errors.hpp"
#include "json.hpp"

namespace gvarfsv {

using nlohmann::json;

namespace {

// Walks one JSON object, recording type problems and unknown keys.
class Section {
 public:
  Section(const json* obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (obj_ && !obj_->is_object()) {
      problems_.push_back(path_ + " must be an object");
      obj_ = nullptr;
    }
  }

  ~Section() {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.count(key)) problems_.push_back("unknown key " + name(key));
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void get(const std::string& key, int& out) {
    if (const json* v = child(key)) {
      if (v->is_number_integer()) {
        out = v->get<int>();
      } else {
        problems_.push_back(name(key) + " must be an integer");
      }
    }
  }

  void get(const std::string& key, std::uint64_t& out) {
    if (const json* v = child(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<long long>() >= 0)) {
        out = v->get<std::uint64_t>();
      } else {
        problems_.push_back(name(key) + " must be a non-negative integer");
      }
    }
  }

  void get(const std::string& key, double& out) {
    if (const json* v = child(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        problems_.push_back(name(key) + " must be a number");
      }
    }
  }

  void get(const std::string& key, bool& out) {
    if (const json* v = child(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        problems_.push_back(name(key) + " must be true or false");
      }
    }
  }

  void get(const std::string& key, std::string& out) {
    if (const json* v = child(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        problems_.push_back(name(key) + " must be a string");
      }
    }
  }

  void get(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = child(key)) {
      bool ok = v->is_array();
      if (ok) {
        for (const auto& e : *v) ok = ok && e.is_string();
      }
      if (ok) {
        out = v->get<std::vector<std::string>>();
      } else {
        problems_.push_back(name(key) + " must be an array of strings");
      }
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::vector<std::string>& problems() { return problems_; }

 private:
  const json* obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

void parse_transforms(const json* node, TransformSpec& spec, std::vector<std::string>& problems) {
  if (!node) return;
  if (!node->is_object()) {
    problems.push_back("data.transforms must be an object keyed by variable name");
    return;
  }
  for (const auto& [var, entry] : node->items()) {
    Section s(&entry, "data.transforms." + var, problems);
    SeriesTransform t;
    std::string directive = "none";
    s.get("directive", directive);
    s.get("deseasonalize", t.deseasonalize);
    try {
      t.directive = parse_directive(directive);
    } catch (const InputError& e) {
      problems.push_back(s.name("directive") + ": " + e.what());
    }
    spec.by_variable[var] = t;
  }
}

void validate_run_config(const RunConfig& c, std::vector<std::string>& problems) {
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  };
  collect([&] { c.prior.validate(); });
  collect([&] { c.sampler.validate(); });
  ModelDims dims;
  dims.regions = c.model.regions;
  dims.vars_per_region = c.model.vars_per_region;
  dims.national_vars = c.model.national_vars;
  dims.domestic_lags = c.model.domestic_lags;
  dims.foreign_lags = c.model.foreign_lags;
  dims.factors = c.model.factors;
  dims.periods = c.model.periods;
  collect([&] {
    try {
      dims.validate();
    } catch (const ConfigError& e) {
      std::vector<std::string> prefixed;
      for (const auto& p : e.problems()) prefixed.push_back("model." + p);
      throw ConfigError(prefixed);
    }
  });
  if (c.structural.horizon < 0) problems.push_back("structural.horizon must be >= 0");
  if (c.structural.covariance != "time_average" && c.structural.covariance != "date") {
    problems.push_back("structural.covariance must be \"time_average\" or \"date\"");
  }
  if (c.structural.covariance == "date") {
    try {
      Quarter::parse(c.structural.date);
    } catch (const InputError&) {
      problems.push_back("structural.date must be a quarter label like 1995Q1 when covariance is \"date\"");
    }
  }
  auto frac = [&](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) problems.push_back(std::string("structural.") + name + " must lie in (0, 1)");
  };
  frac(c.structural.upper_frac, "upper_frac");
  frac(c.structural.lower_frac, "lower_frac");
  if (c.regression.horizon < -1) problems.push_back("regression.horizon must be >= 0, or -1 for the peak");
  if (c.regression.covariates.empty()) problems.push_back("regression.covariates must not be empty");
  if (c.simulate.survey_households < 2) problems.push_back("simulate.survey_households must be >= 2");
  if (c.output_dir.empty()) problems.push_back("output must not be empty");
}

}  // namespace

std::string RunConfig::resolve(const std::string& configured, const std::string& fallback) const {
  namespace fs = std::filesystem;
  if (configured.empty()) return (fs::path(output_dir) / fallback).string();
  const fs::path p(configured);
  if (p.is_absolute()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

RunConfig parse_run_config(const std::string& json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  RunConfig c;
  c.base_dir = base_dir;
  std::vector<std::string> problems;
  {
    Section top(&root, "", problems);
    top.get("output", c.output_dir);
    {
      Section s(top.child("data"), "data", problems);
      s.get("panel", c.data.panel);
      s.get("centroids", c.data.centroids);
      s.get("survey", c.data.survey);
      s.get("covariates", c.data.covariates);
      s.get("national_label", c.data.national_label);
      s.get("permissive", c.data.permissive);
      s.get("region_variables", c.data.region_variables);
      s.get("national_variables", c.data.national_variables);
      parse_transforms(s.child("transforms"), c.data.transforms, problems);
    }
    {
      Section s(top.child("model"), "model", problems);
      s.get("regions", c.model.regions);
      s.get("vars_per_region", c.model.vars_per_region);
      s.get("national_vars", c.model.national_vars);
      s.get("periods", c.model.periods);
      s.get("domestic_lags", c.model.domestic_lags);
      s.get("foreign_lags", c.model.foreign_lags);
      s.get("factors", c.model.factors);
    }
    {
      Section s(top.child("prior"), "prior", problems);
      s.get("common_mean_var", c.prior.common_mean_var);
      s.get("variance_shape", c.prior.variance_shape);
      s.get("variance_scale", c.prior.variance_scale);
      s.get("national_coef_var", c.prior.national_coef_var);
      s.get("loading_var", c.prior.loading_var);
      s.get("sv_mean_var", c.prior.sv_mean_var);
      s.get("sv_sigma_shape", c.prior.sv_sigma_shape);
      s.get("sv_sigma_rate", c.prior.sv_sigma_rate);
      s.get("sv_rho_a", c.prior.sv_rho_a);
      s.get("sv_rho_b", c.prior.sv_rho_b);
    }
    {
      Section s(top.child("sampler"), "sampler", problems);
      s.get("iterations", c.sampler.total_iterations);
      s.get("burn_in", c.sampler.burn_in);
      s.get("thin", c.sampler.thin);
      s.get("seed", c.sampler.seed);
      s.get("threads", c.sampler.threads);
      s.get("national_intercept", c.sampler.national_intercept);
      s.get("store_paths", c.sampler.store_paths);
    }
    {
      Section s(top.child("structural"), "structural", problems);
      s.get("horizon", c.structural.horizon);
      s.get("covariance", c.structural.covariance);
      s.get("date", c.structural.date);
      s.get("rescale_impact", c.structural.rescale_impact);
      s.get("upper_frac", c.structural.upper_frac);
      s.get("lower_frac", c.structural.lower_frac);
      s.get("response_variable", c.structural.response_variable);
    }
    {
      Section s(top.child("regression"), "regression", problems);
      s.get("horizon", c.regression.horizon);
      s.get("covariates", c.regression.covariates);
    }
    {
      Section s(top.child("simulate"), "simulate", problems);
      s.get("seed", c.simulate.seed);
      s.get("zero_noise", c.simulate.zero_noise);
      s.get("survey_first_year", c.simulate.survey_first_year);
      s.get("survey_households", c.simulate.survey_households);
    }
  }
  validate_run_config(c, problems);
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_run_config(ss.str(), parent.empty() ? "." : parent.string());
}

Overrides overrides_from_env() {
  Overrides o;
  std::vector<std::string> problems;
  auto read = [](const char* suffix) -> std::optional<std::string> {
    const std::string name = std::string(kEnvPrefix) + suffix;
    const char* v = std::getenv(name.c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  auto to_int = [&](const std::string& text, const char* var) -> std::optional<long long> {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    problems.push_back(std::string(kEnvPrefix) + var + " is not an integer: '" + text + "'");
    return std::nullopt;
  };
  if (auto v = read("SEED")) {
    if (auto n = to_int(*v, "SEED")) {
      if (*n < 0) {
        problems.push_back(std::string(kEnvPrefix) + "SEED must be non-negative");
      } else {
        o.seed = static_cast<std::uint64_t>(*n);
      }
    }
  }
  if (auto v = read("OUT")) o.out = *v;
  if (auto v = read("THREADS")) {
    if (auto n = to_int(*v, "THREADS")) o.threads = static_cast<int>(*n);
  }
  if (auto v = read("HORIZON")) {
    if (auto n = to_int(*v, "HORIZON")) o.horizon = static_cast<int>(*n);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return o;
}

void apply_overrides(RunConfig& config, const Overrides& env, const Overrides& flags) {
  for (const Overrides* o : {&env, &flags}) {
    if (o->seed) {
      config.sampler.seed = *o->seed;
      config.simulate.seed = *o->seed;
    }
    if (o->out) config.output_dir = *o->out;
    if (o->threads) config.sampler.threads = *o->threads;
    if (o->horizon) config.structural.horizon = *o->horizon;
  }
  std::vector<std::string> problems;
  validate_run_config(config, problems);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string canonical_config_json(const RunConfig& c) {
  json transforms = json::object();
  for (const auto& [var, t] : c.data.transforms.by_variable) {
    transforms[var] = {{"directive", to_string(t.directive)}, {"deseasonalize", t.deseasonalize}};
  }
  // Threads and the output directory do not affect results and stay out of the hash.
  json j = {
      {"data",
       {{"panel", c.data.panel},
        {"centroids", c.data.centroids},
        {"survey", c.data.survey},
        {"covariates", c.data.covariates},
        {"national_label", c.data.national_label},
        {"permissive", c.data.permissive},
        {"region_variables", c.data.region_variables},
        {"national_variables", c.data.national_variables},
        {"transforms", transforms}}},
      {"model",
       {{"regions", c.model.regions},
        {"vars_per_region", c.model.vars_per_region},
        {"national_vars", c.model.national_vars},
        {"periods", c.model.periods},
        {"domestic_lags", c.model.domestic_lags},
        {"foreign_lags", c.model.foreign_lags},
        {"factors", c.model.factors}}},
      {"prior",
       {{"common_mean_var", c.prior.common_mean_var},
        {"variance_shape", c.prior.variance_shape},
        {"variance_scale", c.prior.variance_scale},
        {"national_coef_var", c.prior.national_coef_var},
        {"loading_var", c.prior.loading_var},
        {"sv_mean_var", c.prior.sv_mean_var},
        {"sv_sigma_shape", c.prior.sv_sigma_shape},
        {"sv_sigma_rate", c.prior.sv_sigma_rate},
        {"sv_rho_a", c.prior.sv_rho_a},
        {"sv_rho_b", c.prior.sv_rho_b}}},
      {"sampler",
       {{"iterations", c.sampler.total_iterations},
        {"burn_in", c.sampler.burn_in},
        {"thin", c.sampler.thin},
        {"seed", c.sampler.seed},
        {"national_intercept", c.sampler.national_intercept},
        {"store_paths", c.sampler.store_paths}}},
      {"structural",
       {{"horizon", c.structural.horizon},
        {"covariance", c.structural.covariance},
        {"date", c.structural.date},
        {"rescale_impact", c.structural.rescale_impact},
        {"upper_frac", c.structural.upper_frac},
        {"lower_frac", c.structural.lower_frac},
        {"response_variable", c.structural.response_variable}}},
      {"regression", {{"horizon", c.regression.horizon}, {"covariates", c.regression.covariates}}},
      {"simulate",
       {{"seed", c.simulate.seed},
        {"zero_noise", c.simulate.zero_noise},
        {"survey_first_year", c.simulate.survey_first_year},
        {"survey_households", c.simulate.survey_households}}},
  };
  return j.dump();
}

}  // namespace gvarfsv
