#include "gvarfsv/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

#include "gvarfsv/csv.hpp"
#include "gvarfsv/errors.hpp"

namespace gvarfsv {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;

struct ParsedPeriod {
  int year = 0;
  int sub = 0;  // quarter 1..4 or month 1..12
  bool monthly = false;
};

ParsedPeriod parse_period(const std::string& label) {
  ParsedPeriod p;
  if (label.size() == 6 && (label[4] == 'Q' || label[4] == 'q')) {
    p.year = static_cast<int>(parse_int(label.substr(0, 4), "period " + label));
    p.sub = static_cast<int>(parse_int(label.substr(5), "period " + label));
    if (p.sub < 1 || p.sub > 4) throw InputError("period " + label + ": quarter must be 1..4");
    return p;
  }
  if (label.size() == 7 && (label[4] == 'M' || label[4] == 'm' || label[4] == '-')) {
    p.year = static_cast<int>(parse_int(label.substr(0, 4), "period " + label));
    p.sub = static_cast<int>(parse_int(label.substr(5), "period " + label));
    if (p.sub < 1 || p.sub > 12) throw InputError("period " + label + ": month must be 1..12");
    p.monthly = true;
    return p;
  }
  throw InputError("period '" + label + "' is neither YYYYQn nor YYYYMmm");
}

// Collected observations of one series, keyed by quarter index.
struct SeriesBuffer {
  std::map<int, double> quarterly;
  std::map<int, std::vector<double>> monthly;  // quarter index -> months seen
  std::set<int> months_seen;
};

std::map<int, double> finalize_series(const SeriesBuffer& b, const std::string& name) {
  if (!b.monthly.empty() && !b.quarterly.empty()) {
    throw InputError("series " + name + " mixes monthly and quarterly periods");
  }
  if (b.monthly.empty()) return b.quarterly;
  std::map<int, double> out;
  for (const auto& [q, vals] : b.monthly) {
    if (vals.size() != 3) {
      throw InputError("series " + name + ": quarter " + Quarter::from_index(q).label() + " has " +
                       std::to_string(vals.size()) + " of 3 months");
    }
    out[q] = (vals[0] + vals[1] + vals[2]) / 3.0;
  }
  return out;
}

std::vector<double> natural_spline_second_derivs(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  // Tridiagonal system for interior second derivatives (Thomas algorithm).
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = x[i + 1] - x[i];  // h_{i} for row i+1
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> sol(k);
  sol[k - 1] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
  for (std::size_t i = 0; i < k; ++i) m[i + 1] = sol[i];
  return m;
}

}  // namespace

Quarter Quarter::from_index(int index) {
  const int year = index >= 0 ? index / 4 : -((-index + 3) / 4);
  return Quarter{year, index - year * 4 + 1};
}

Quarter Quarter::parse(const std::string& label) {
  const ParsedPeriod p = parse_period(label);
  if (p.monthly) throw InputError("period '" + label + "' is monthly; a quarter was expected");
  return Quarter{p.year, p.sub};
}

std::string Quarter::label() const { return std::to_string(year) + "Q" + std::to_string(quarter); }

SeriesTransform TransformSpec::get(const std::string& variable) const {
  const auto it = by_variable.find(variable);
  return it == by_variable.end() ? SeriesTransform{} : it->second;
}

Directive parse_directive(const std::string& text) {
  if (text == "none") return Directive::kNone;
  if (text == "log") return Directive::kLog;
  if (text == "first_difference" || text == "diff") return Directive::kFirstDifference;
  throw InputError("unknown transform directive '" + text + "' (expected none, log, first_difference)");
}

std::string to_string(Directive d) {
  switch (d) {
    case Directive::kNone: return "none";
    case Directive::kLog: return "log";
    case Directive::kFirstDifference: return "first_difference";
  }
  return "none";
}

RawPanel read_panel_csv(const std::string& path, const PanelSchema& schema) {
  const CsvTable t = read_csv(path);
  check_columns(t, {"region", "variable", "period", "value"}, {"region", "variable", "period", "value"},
                schema.permissive, path);
  const int c_region = t.column("region");
  const int c_var = t.column("variable");
  const int c_period = t.column("period");
  const int c_value = t.column("value");

  std::vector<std::string> regions = schema.regions;
  const bool infer_regions = regions.empty();
  std::map<std::pair<std::string, std::string>, SeriesBuffer> buffers;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = path + " row " + std::to_string(r + 2);
    const std::string& region = row[c_region];
    const std::string& var = row[c_var];
    const bool national = region == schema.national_label;
    const auto& vars = national ? schema.national_variables : schema.region_variables;
    if (std::find(vars.begin(), vars.end(), var) == vars.end()) {
      if (schema.permissive) continue;
      throw InputError(context + ": variable '" + var + "' is not declared in the schema");
    }
    if (!national && infer_regions && std::find(regions.begin(), regions.end(), region) == regions.end()) {
      regions.push_back(region);
    }
    if (!national && !infer_regions && std::find(regions.begin(), regions.end(), region) == regions.end()) {
      if (schema.permissive) continue;
      throw InputError(context + ": region '" + region + "' is not declared in the schema");
    }
    const ParsedPeriod p = parse_period(row[c_period]);
    const double value = parse_double(row[c_value], context);
    SeriesBuffer& b = buffers[{region, var}];
    if (p.monthly) {
      const int month_key = p.year * 12 + p.sub - 1;
      if (!b.months_seen.insert(month_key).second) throw InputError(context + ": duplicate observation");
      b.monthly[p.year * 4 + (p.sub - 1) / 3].push_back(value);
    } else {
      if (!b.quarterly.emplace(p.year * 4 + p.sub - 1, value).second) {
        throw InputError(context + ": duplicate observation");
      }
    }
  }
  require(!regions.empty(), path + ": no regional observations");
  require(!schema.region_variables.empty() && !schema.national_variables.empty(),
          "schema must declare region and national variables");

  std::map<std::pair<std::string, std::string>, std::map<int, double>> series;
  std::optional<std::pair<int, int>> range;
  auto add_series = [&](const std::string& region, const std::string& var) {
    const auto it = buffers.find({region, var});
    if (it == buffers.end()) throw InputError(path + ": series " + region + "/" + var + " is missing");
    auto s = finalize_series(it->second, region + "/" + var);
    require(!s.empty(), path + ": series " + region + "/" + var + " is empty");
    const std::pair<int, int> r{s.begin()->first, s.rbegin()->first};
    if (!range) range = r;
    if (*range != r) {
      throw InputError(path + ": series " + region + "/" + var + " spans " + Quarter::from_index(r.first).label() +
                       ".." + Quarter::from_index(r.second).label() + ", others span " +
                       Quarter::from_index(range->first).label() + ".." +
                       Quarter::from_index(range->second).label());
    }
    if (static_cast<int>(s.size()) != r.second - r.first + 1) {
      throw InputError(path + ": series " + region + "/" + var + " has missing quarters");
    }
    series[{region, var}] = std::move(s);
  };
  for (const auto& v : schema.national_variables) add_series(schema.national_label, v);
  for (const auto& r : regions) {
    for (const auto& v : schema.region_variables) add_series(r, v);
  }

  RawPanel raw;
  raw.regions = regions;
  raw.region_variables = schema.region_variables;
  raw.national_variables = schema.national_variables;
  raw.first_period = Quarter::from_index(range->first);
  const int t_count = range->second - range->first + 1;
  const int n = static_cast<int>(regions.size());
  const int k = static_cast<int>(schema.region_variables.size());
  const int l = static_cast<int>(schema.national_variables.size());
  raw.regional = Array3(t_count, n, k);
  raw.national = Eigen::MatrixXd(t_count, l);
  for (int j = 0; j < l; ++j) {
    const auto& s = series.at({schema.national_label, schema.national_variables[j]});
    for (int t = 0; t < t_count; ++t) raw.national(t, j) = s.at(range->first + t);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      const auto& s = series.at({regions[i], schema.region_variables[j]});
      for (int t = 0; t < t_count; ++t) raw.regional(t, i, j) = s.at(range->first + t);
    }
  }
  return raw;
}

std::vector<double> deseasonalize(std::span<const double> series, int first_quarter) {
  require(series.size() >= 8, "deseasonalize needs at least 8 quarters");
  require(first_quarter >= 1 && first_quarter <= 4, "first_quarter must be 1..4");
  std::array<double, 4> sum{};
  std::array<int, 4> count{};
  double total = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    const std::size_t q = (first_quarter - 1 + t) % 4;
    sum[q] += series[t];
    ++count[q];
    total += series[t];
  }
  const double overall = total / static_cast<double>(series.size());
  std::vector<double> out(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    const std::size_t q = (first_quarter - 1 + t) % 4;
    out[t] = series[t] - sum[q] / count[q] + overall;
  }
  return out;
}

PanelDataset apply_transforms(const RawPanel& raw, const TransformSpec& spec) {
  const int t_raw = raw.periods();
  const int n = raw.regional.dim1();
  const int k = raw.regional.dim2();
  const int l = static_cast<int>(raw.national.cols());
  for (const auto& v : raw.region_variables) {
    require(std::find(raw.national_variables.begin(), raw.national_variables.end(), v) ==
                raw.national_variables.end(),
            "variable name '" + v + "' is used for both a region and a national series");
  }

  bool any_difference = false;
  for (const auto& v : raw.region_variables) any_difference |= spec.get(v).directive == Directive::kFirstDifference;
  for (const auto& v : raw.national_variables) any_difference |= spec.get(v).directive == Directive::kFirstDifference;
  const int offset = any_difference ? 1 : 0;
  const int t_out = t_raw - offset;
  require(t_out >= 1, "no observations left after differencing");

  PanelDataset out;
  out.regional = Array3(t_out, n, k);
  out.national = Eigen::MatrixXd(t_out, l);
  out.region_names = raw.regions;
  out.region_variables = raw.region_variables;
  out.national_variables = raw.national_variables;
  for (int t = 0; t < t_out; ++t) out.periods.push_back(Quarter::from_index(raw.first_period.index() + offset + t).label());

  auto transform = [&](std::vector<double> x, const std::string& name, const SeriesTransform& tr) {
    if (tr.deseasonalize) x = deseasonalize(x, raw.first_period.quarter);
    std::vector<double> y;
    switch (tr.directive) {
      case Directive::kNone:
        y.assign(x.begin() + offset, x.end());
        break;
      case Directive::kLog:
        for (int t = offset; t < t_raw; ++t) {
          if (!(x[t] > 0.0)) {
            throw InputError("log transform of non-positive value " + format_double(x[t]) + " in series " + name +
                             " at period " + Quarter::from_index(raw.first_period.index() + t).label());
          }
          y.push_back(std::log(x[t]));
        }
        break;
      case Directive::kFirstDifference:
        for (int t = 1; t < t_raw; ++t) y.push_back(x[t] - x[t - 1]);
        break;
    }
    return y;
  };
  auto log_entry = [&](const std::string& name, const SeriesTransform& tr) {
    std::string e = name + ":";
    if (tr.deseasonalize) e += " deseasonalize(quarter dummies);";
    e += " " + to_string(tr.directive);
    if (any_difference && tr.directive != Directive::kFirstDifference) e += "; trimmed first period";
    out.transform_log.push_back(e);
  };

  for (int j = 0; j < l; ++j) {
    const std::string& var = raw.national_variables[j];
    const SeriesTransform tr = spec.get(var);
    std::vector<double> x(t_raw);
    for (int t = 0; t < t_raw; ++t) x[t] = raw.national(t, j);
    const auto y = transform(std::move(x), "national/" + var, tr);
    for (int t = 0; t < t_out; ++t) out.national(t, j) = y[t];
    log_entry("national/" + var, tr);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      const std::string& var = raw.region_variables[j];
      const SeriesTransform tr = spec.get(var);
      std::vector<double> x(t_raw);
      for (int t = 0; t < t_raw; ++t) x[t] = raw.regional(t, i, j);
      const std::string name = raw.regions[i] + "/" + var;
      const auto y = transform(std::move(x), name, tr);
      for (int t = 0; t < t_out; ++t) out.regional(t, i, j) = y[t];
      log_entry(name, tr);
    }
  }
  out.validate();
  return out;
}

QuarterlySeries annual_to_quarterly_spline(const std::map<int, double>& annual) {
  require(!annual.empty(), "spline interpolation needs at least one annual value");
  const int first_year = annual.begin()->first;
  const int last_year = annual.rbegin()->first;
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [year, value] : annual) {
    x.push_back(4.0 * (year - first_year) + 1.0);  // Q2 anchor
    y.push_back(value);
  }
  const std::size_t n = x.size();
  if (n < 3) warn("fewer than 3 annual points: using linear interpolation");

  const std::vector<double> m = natural_spline_second_derivs(x, y);
  auto eval = [&](double at) {
    if (n == 1) return y[0];
    if (at <= x.front()) {
      const double h = x[1] - x[0];
      const double slope = (y[1] - y[0]) / h - h * (2.0 * m[0] + m[1]) / 6.0;
      return y[0] + slope * (at - x[0]);
    }
    if (at >= x.back()) {
      const double h = x[n - 1] - x[n - 2];
      const double slope = (y[n - 1] - y[n - 2]) / h + h * (m[n - 2] + 2.0 * m[n - 1]) / 6.0;
      return y[n - 1] + slope * (at - x[n - 1]);
    }
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), at) - x.begin()) - 1;
    const double h = x[i + 1] - x[i];
    const double a = x[i + 1] - at;
    const double b = at - x[i];
    return m[i] * a * a * a / (6.0 * h) + m[i + 1] * b * b * b / (6.0 * h) + (y[i] / h - m[i] * h / 6.0) * a +
           (y[i + 1] / h - m[i + 1] * h / 6.0) * b;
  };

  QuarterlySeries out;
  out.first = Quarter{first_year, 1};
  const int quarters = 4 * (last_year - first_year + 1);
  out.values.reserve(quarters);
  for (int q = 0; q < quarters; ++q) out.values.push_back(eval(static_cast<double>(q)));
  return out;
}

double equivalized_income(double income, int household_size) {
  if (household_size < 1) {
    throw InputError("household size must be >= 1, got " + std::to_string(household_size));
  }
  return std::max(income, 0.0) / std::sqrt(static_cast<double>(household_size));
}

std::vector<double> equivalize(const std::vector<HouseholdRecord>& records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(equivalized_income(r.income, r.household_size));
  return out;
}

double weighted_gini(std::span<const double> values, std::span<const double> weights) {
  require(values.size() == weights.size(), "weighted_gini: values and weights differ in length");
  require(!values.empty(), "weighted_gini: empty sample");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  double total_w = 0.0;
  double total_wx = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] >= 0.0 && std::isfinite(values[i]), "weighted_gini: values must be finite and nonnegative");
    require(weights[i] >= 0.0 && std::isfinite(weights[i]), "weighted_gini: weights must be finite and nonnegative");
    total_w += weights[i];
    total_wx += weights[i] * values[i];
  }
  require(total_w > 0.0, "weighted_gini: weights sum to zero");
  require(total_wx > 0.0, "weighted_gini: undefined when every weighted value is zero");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // Sorted ascending: sum_{i<j} w_i w_j (x_j - x_i) = sum_j w_j x_j (2 C_j + w_j - W) / 2 * 2,
  // with C_j the weight strictly before j.
  double below = 0.0;
  double pair_sum = 0.0;  // sum over ordered pairs of w_i w_j |x_i - x_j|
  for (std::size_t idx : order) {
    const double w = weights[idx];
    pair_sum += w * values[idx] * (2.0 * below + w - total_w);
    below += w;
  }
  pair_sum *= 2.0;
  const double mean = total_wx / total_w;
  return pair_sum / (2.0 * total_w * total_w * mean);
}

std::map<std::string, std::map<int, double>> gini_by_region_year(const std::vector<HouseholdRecord>& records) {
  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.region, r.year}];
    g.first.push_back(equivalized_income(r.income, r.household_size));
    g.second.push_back(r.weight);
  }
  std::map<std::string, std::map<int, double>> out;
  for (const auto& [key, g] : groups) {
    try {
      out[key.first][key.second] = weighted_gini(g.first, g.second);
    } catch (const InputError& e) {
      throw InputError("region '" + key.first + "', year " + std::to_string(key.second) + ": " + e.what());
    }
  }
  return out;
}

std::vector<HouseholdRecord> read_survey_csv(const std::string& path, bool permissive) {
  const CsvTable t = read_csv(path);
  check_columns(t, {"income", "size", "weight", "year"}, {"income", "size", "weight", "year", "region"}, permissive,
                path);
  const int c_income = t.column("income");
  const int c_size = t.column("size");
  const int c_weight = t.column("weight");
  const int c_year = t.column("year");
  const int c_region = t.column("region");
  std::vector<HouseholdRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = path + " row " + std::to_string(r + 2);
    HouseholdRecord rec;
    rec.income = parse_double(row[c_income], context);
    rec.household_size = static_cast<int>(parse_int(row[c_size], context));
    if (rec.household_size < 1) throw InputError(context + ": household size must be >= 1");
    rec.weight = parse_double(row[c_weight], context);
    if (rec.weight < 0.0) throw InputError(context + ": negative survey weight");
    rec.year = static_cast<int>(parse_int(row[c_year], context));
    rec.region = c_region >= 0 ? row[c_region] : std::string("all");
    out.push_back(std::move(rec));
  }
  return out;
}

Centroids read_centroids_csv(const std::string& path, const std::vector<std::string>& regions, bool permissive) {
  const CsvTable t = read_csv(path);
  check_columns(t, {"region", "x", "y", "convention"}, {"region", "x", "y", "convention"}, permissive, path);
  const int c_region = t.column("region");
  const int c_x = t.column("x");
  const int c_y = t.column("y");
  const int c_conv = t.column("convention");
  std::map<std::string, Eigen::Vector2d> by_region;
  std::vector<std::string> order;
  std::optional<CoordinateConvention> convention;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string context = path + " row " + std::to_string(r + 2);
    CoordinateConvention conv;
    if (row[c_conv] == "planar") {
      conv = CoordinateConvention::kPlanar;
    } else if (row[c_conv] == "spherical") {
      conv = CoordinateConvention::kSpherical;
    } else {
      throw InputError(context + ": convention must be planar or spherical");
    }
    if (convention && *convention != conv) throw InputError(context + ": mixed coordinate conventions");
    convention = conv;
    const Eigen::Vector2d xy(parse_double(row[c_x], context), parse_double(row[c_y], context));
    if (!xy.allFinite()) throw InputError(context + ": non-finite coordinate");
    if (!by_region.emplace(row[c_region], xy).second) throw InputError(context + ": duplicate region");
    order.push_back(row[c_region]);
  }
  require(!order.empty(), path + ": no centroids");
  Centroids c;
  c.convention = *convention;
  c.regions = regions.empty() ? order : regions;
  for (const auto& r : c.regions) {
    const auto it = by_region.find(r);
    if (it == by_region.end()) throw InputError(path + ": no centroid for region '" + r + "'");
    c.coords.push_back(it->second);
  }
  return c;
}

double centroid_distance(const Centroids& c, int i, int j) {
  if (c.convention == CoordinateConvention::kPlanar) return (c.coords[i] - c.coords[j]).norm();
  const double deg = kPi / 180.0;
  const double lon1 = c.coords[i].x() * deg;
  const double lat1 = c.coords[i].y() * deg;
  const double lon2 = c.coords[j].x() * deg;
  const double lat2 = c.coords[j].y() * deg;
  const double a = std::pow(std::sin(0.5 * (lat2 - lat1)), 2) +
                   std::cos(lat1) * std::cos(lat2) * std::pow(std::sin(0.5 * (lon2 - lon1)), 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

WeightMatrix inverse_distance_weights(const Centroids& centroids) {
  const int n = static_cast<int>(centroids.coords.size());
  require(n >= 2, "inverse distance weights need at least 2 regions");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = centroid_distance(centroids, i, j);
      if (!(d > 0.0)) {
        const std::string a = i < static_cast<int>(centroids.regions.size()) ? centroids.regions[i] : std::to_string(i);
        const std::string b = j < static_cast<int>(centroids.regions.size()) ? centroids.regions[j] : std::to_string(j);
        throw InputError("centroids of regions '" + a + "' and '" + b + "' coincide");
      }
      w(i, j) = 1.0 / d;
    }
    w.row(i) /= w.row(i).sum();
  }
  return WeightMatrix(std::move(w));
}

}  // namespace gvarfsv
