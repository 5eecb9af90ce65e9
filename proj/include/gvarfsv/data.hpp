#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/array3.hpp"
#include "gvarfsv/model.hpp"

// Data preparation: series transforms, survey-based inequality measures,
// temporal disaggregation and the spatial weight matrix.
namespace gvarfsv {

struct Quarter {
  int year = 0;
  int quarter = 1;  // 1..4

  int index() const noexcept { return year * 4 + (quarter - 1); }
  static Quarter from_index(int index);
  /// Parses "1985Q1".
  static Quarter parse(const std::string& label);
  std::string label() const;
  bool operator==(const Quarter&) const = default;
};

enum class Directive { kNone, kLog, kFirstDifference };

struct SeriesTransform {
  Directive directive = Directive::kNone;
  bool deseasonalize = false;
};

/// Transform directives keyed by variable name; unlisted variables pass through.
struct TransformSpec {
  std::map<std::string, SeriesTransform> by_variable;

  SeriesTransform get(const std::string& variable) const;
};

Directive parse_directive(const std::string& text);
std::string to_string(Directive d);

/// Untransformed panel on a common quarterly grid.
struct RawPanel {
  std::vector<std::string> regions;
  std::vector<std::string> region_variables;
  std::vector<std::string> national_variables;  // first entry: uncertainty index
  Quarter first_period;
  Array3 regional;           // T x N x k
  Eigen::MatrixXd national;  // T x ell

  int periods() const noexcept { return regional.dim0(); }
};

struct PanelSchema {
  std::vector<std::string> regions;  // empty: order of first appearance
  std::vector<std::string> region_variables;
  std::vector<std::string> national_variables;
  std::string national_label = "national";
  bool permissive = false;
};

/// Long-format CSV with columns region, variable, period, value. Periods are
/// "YYYYQn" or monthly "YYYYMmm"; monthly series are averaged to quarters
/// (all three months required).
RawPanel read_panel_csv(const std::string& path, const PanelSchema& schema);

/// Deseasonalize, then log or first-difference each series. If any series is
/// differenced every series is trimmed to the common support.
PanelDataset apply_transforms(const RawPanel& raw, const TransformSpec& spec);

/// Subtracts quarter-of-year means (dummy regression) and re-adds the overall
/// mean. `first_quarter` is the quarter (1..4) of the first observation.
std::vector<double> deseasonalize(std::span<const double> series, int first_quarter);

struct QuarterlySeries {
  Quarter first;
  std::vector<double> values;
};

/// Natural cubic spline through annual values placed at Q2 of each year,
/// evaluated at every quarter from Q1 of the first year to Q4 of the last
/// (linear beyond the end knots). Fewer than three points fall back to linear
/// interpolation with a warning.
QuarterlySeries annual_to_quarterly_spline(const std::map<int, double>& annual);

struct HouseholdRecord {
  double income = 0.0;
  int household_size = 1;
  double weight = 0.0;
  int year = 0;
  std::string region;
};

/// Square-root scale with negative incomes set to zero.
double equivalized_income(double income, int household_size);
std::vector<double> equivalize(const std::vector<HouseholdRecord>& records);

/// Weighted Gini, sum_ij w_i w_j |x_i - x_j| / (2 W^2 xbar_w), in O(n log n).
double weighted_gini(std::span<const double> values, std::span<const double> weights);

/// Gini of equivalized income per (region, year).
std::map<std::string, std::map<int, double>> gini_by_region_year(const std::vector<HouseholdRecord>& records);

std::vector<HouseholdRecord> read_survey_csv(const std::string& path, bool permissive);

enum class CoordinateConvention { kPlanar, kSpherical };

struct Centroids {
  std::vector<std::string> regions;
  std::vector<Eigen::Vector2d> coords;  // spherical: (longitude, latitude) in degrees
  CoordinateConvention convention = CoordinateConvention::kPlanar;
};

/// Columns region, x, y, convention (planar | spherical). Rows are reordered
/// to `regions` when given.
Centroids read_centroids_csv(const std::string& path, const std::vector<std::string>& regions, bool permissive);

double centroid_distance(const Centroids& c, int i, int j);

WeightMatrix inverse_distance_weights(const Centroids& centroids);

}  // namespace gvarfsv
