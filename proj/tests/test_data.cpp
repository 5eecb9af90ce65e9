#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gvarfsv/data.hpp"
#include "gvarfsv/errors.hpp"
#include "support.hpp"

using namespace gvarfsv;
using testing::TestRandom;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "gvarfsv_test_data";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << content;
  return path.string();
}

double brute_force_gini(const std::vector<double>& x, const std::vector<double>& w) {
  double num = 0.0;
  double total_w = 0.0;
  double total_wx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    total_w += w[i];
    total_wx += w[i] * x[i];
    for (std::size_t j = 0; j < x.size(); ++j) num += w[i] * w[j] * std::abs(x[i] - x[j]);
  }
  return num / (2.0 * total_w * total_w * (total_wx / total_w));
}

RawPanel tiny_raw(const std::vector<double>& series) {
  RawPanel raw;
  raw.regions = {"A"};
  raw.region_variables = {"y"};
  raw.national_variables = {"u"};
  raw.first_period = Quarter{2000, 1};
  const int t = static_cast<int>(series.size());
  raw.regional = Array3(t, 1, 1);
  raw.national = Eigen::MatrixXd(t, 1);
  for (int i = 0; i < t; ++i) {
    raw.regional(i, 0, 0) = series[i];
    raw.national(i, 0) = 10.0 + i;
  }
  return raw;
}

PanelSchema tiny_schema() {
  PanelSchema s;
  s.region_variables = {"y"};
  s.national_variables = {"u"};
  return s;
}

}  // namespace

TEST_CASE("quarters") {
  CHECK(Quarter::parse("1985Q3") == Quarter{1985, 3});
  CHECK(Quarter::parse("1985Q3").label() == "1985Q3");
  CHECK(Quarter::from_index(Quarter{1999, 4}.index() + 1) == Quarter{2000, 1});
  CHECK_THROWS_AS(Quarter::parse("1985Q5"), InputError);
  CHECK_THROWS_AS(Quarter::parse("1985M01"), InputError);
}

TEST_CASE("equivalized income") {
  CHECK(equivalized_income(-500.0, 4) == 0.0);
  CHECK(equivalized_income(900.0, 9) == doctest::Approx(300.0));
  CHECK(equivalized_income(100.0, 1) == 100.0);
  CHECK_THROWS_AS(equivalized_income(100.0, 0), InputError);
}

TEST_CASE("weighted gini") {
  SUBCASE("two-point example") {
    const std::vector<double> x{0.0, 1.0};
    const std::vector<double> w{1.0, 1.0};
    CHECK(weighted_gini(x, w) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("equality gives zero") {
    const std::vector<double> x(7, 3.0);
    const std::vector<double> w{1, 2, 3, 4, 5, 6, 7};
    CHECK(weighted_gini(x, w) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("matches the pairwise definition") {
    TestRandom r(1);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      const int n = r.integer(1, 60);
      std::vector<double> x(n), w(n);
      for (int i = 0; i < n; ++i) {
        x[i] = r.uniform() < 0.1 ? 0.0 : std::exp(r.normal());
        w[i] = r.uniform() < 0.1 ? 0.0 : r.uniform(0.1, 5.0);
        if (rep % 3 == 0 && i > 0) x[i] = x[i - 1];  // ties
      }
      x[0] = 1.0;
      w[0] = 1.0;
      worst = std::max(worst, std::abs(weighted_gini(x, w) - brute_force_gini(x, w)));
    }
    CHECK(worst < 1e-12);
  }
  SUBCASE("scale invariant in values and weights") {
    TestRandom r(2);
    std::vector<double> x(30), w(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = std::exp(r.normal());
      w[i] = r.uniform(0.5, 2.0);
    }
    const double g = weighted_gini(x, w);
    std::vector<double> x2 = x, w2 = w;
    for (double& v : x2) v *= 13.0;
    for (double& v : w2) v *= 0.01;
    CHECK(weighted_gini(x2, w2) == doctest::Approx(g).epsilon(1e-12));
  }
  SUBCASE("invalid input") {
    const std::vector<double> x{1.0, 2.0};
    const std::vector<double> zero_w{0.0, 0.0};
    const std::vector<double> zero_x{0.0, 0.0};
    const std::vector<double> w{1.0, 1.0};
    const std::vector<double> neg{-1.0, 2.0};
    CHECK_THROWS_AS(weighted_gini(x, zero_w), InputError);
    CHECK_THROWS_AS(weighted_gini(zero_x, w), InputError);
    CHECK_THROWS_AS(weighted_gini(neg, w), InputError);
    CHECK_THROWS_AS(weighted_gini(std::vector<double>{}, std::vector<double>{}), InputError);
  }
  SUBCASE("grouped by region and year") {
    std::vector<HouseholdRecord> recs{{100, 1, 1, 2000, "A"}, {0, 1, 1, 2000, "A"}, {400, 4, 2, 2001, "A"},
                                      {50, 1, 1, 2000, "B"},  {50, 1, 1, 2000, "B"}};
    const auto g = gini_by_region_year(recs);
    CHECK(g.at("A").at(2000) == doctest::Approx(0.5));
    CHECK(g.at("A").at(2001) == doctest::Approx(0.0));
    CHECK(g.at("B").at(2000) == doctest::Approx(0.0));
  }
}

TEST_CASE("annual to quarterly spline") {
  SUBCASE("constant") {
    const auto q = annual_to_quarterly_spline({{2000, 0.3}, {2001, 0.3}, {2002, 0.3}, {2003, 0.3}});
    CHECK(q.first == Quarter{2000, 1});
    REQUIRE(q.values.size() == 16);
    for (double v : q.values) CHECK(v == doctest::Approx(0.3).epsilon(1e-14));
  }
  SUBCASE("linear data stay linear, including the extrapolated ends") {
    std::map<int, double> annual;
    for (int y = 1990; y < 1997; ++y) annual[y] = 0.1 + 0.02 * (y - 1990);
    const auto q = annual_to_quarterly_spline(annual);
    REQUIRE(q.values.size() == 28);
    for (std::size_t i = 0; i < q.values.size(); ++i) {
      // Annual value sits at Q2, so quarter i is (i - 1) / 4 years after 1990Q2.
      const double expected = 0.1 + 0.02 * (static_cast<double>(i) - 1.0) / 4.0;
      CHECK(std::abs(q.values[i] - expected) < 1e-12);
    }
  }
  SUBCASE("passes through the knots") {
    TestRandom r(3);
    std::map<int, double> annual;
    for (int y = 2000; y < 2012; ++y) annual[y] = r.uniform(0.2, 0.5);
    const auto q = annual_to_quarterly_spline(annual);
    for (const auto& [year, value] : annual) CHECK(std::abs(q.values[4 * (year - 2000) + 1] - value) < 1e-12);
  }
  SUBCASE("linear beyond the last knot") {
    std::map<int, double> annual{{2000, 0.0}, {2001, 1.0}, {2002, 0.0}, {2003, 2.0}, {2004, 1.0}};
    const auto q = annual_to_quarterly_spline(annual);
    // Second differences vanish on the linear extrapolation stretch.
    const std::size_t n = q.values.size();
    CHECK(std::abs(q.values[n - 1] - 2 * q.values[n - 2] + q.values[n - 3]) < 1e-12);
  }
  SUBCASE("short input falls back to linear") {
    const auto two = annual_to_quarterly_spline({{2000, 1.0}, {2001, 2.0}});
    REQUIRE(two.values.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(two.values[i] == doctest::Approx(1.0 + (i - 1.0) / 4.0));
    const auto one = annual_to_quarterly_spline({{2000, 0.4}});
    REQUIRE(one.values.size() == 4);
    for (double v : one.values) CHECK(v == doctest::Approx(0.4));
  }
}

TEST_CASE("deseasonalize") {
  SUBCASE("constant series unchanged") {
    const std::vector<double> x(12, 2.5);
    for (double v : deseasonalize(x, 3)) CHECK(v == doctest::Approx(2.5));
  }
  SUBCASE("pure seasonal pattern is flattened to its mean") {
    std::vector<double> x;
    for (int t = 0; t < 16; ++t) x.push_back(t % 4 < 2 ? 1.0 : -1.0);
    for (double v : deseasonalize(x, 1)) CHECK(std::abs(v) < 1e-15);
  }
  SUBCASE("idempotent and mean preserving") {
    TestRandom r(4);
    std::vector<double> x(23);
    for (double& v : x) v = r.normal();
    const auto once = deseasonalize(x, 2);
    const auto twice = deseasonalize(once, 2);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      CHECK(std::abs(once[t] - twice[t]) < 1e-12);
      m0 += x[t];
      m1 += once[t];
    }
    CHECK(std::abs(m0 - m1) < 1e-12);
  }
  SUBCASE("too short") {
    const std::vector<double> x(7, 1.0);
    CHECK_THROWS_AS(deseasonalize(x, 1), InputError);
  }
}

TEST_CASE("series transforms") {
  SUBCASE("directive names") {
    CHECK(parse_directive("log") == Directive::kLog);
    CHECK(parse_directive("diff") == Directive::kFirstDifference);
    CHECK(parse_directive("first_difference") == Directive::kFirstDifference);
    CHECK(parse_directive("none") == Directive::kNone);
    CHECK_THROWS_AS(parse_directive("sqrt"), InputError);
  }
  SUBCASE("none passes through") {
    const PanelDataset d = apply_transforms(tiny_raw({1, 3, 6}), {});
    CHECK(d.periods == std::vector<std::string>{"2000Q1", "2000Q2", "2000Q3"});
    CHECK(d.regional(2, 0, 0) == 6.0);
  }
  SUBCASE("differencing trims every series") {
    TransformSpec spec;
    spec.by_variable["y"] = {Directive::kFirstDifference, false};
    const PanelDataset d = apply_transforms(tiny_raw({1, 3, 6}), spec);
    REQUIRE(d.periods_count() == 2);
    CHECK(d.regional(0, 0, 0) == 2.0);
    CHECK(d.regional(1, 0, 0) == 3.0);
    CHECK(d.national(0, 0) == 11.0);
    CHECK(d.periods.front() == "2000Q2");
    bool trimmed = false;
    for (const auto& e : d.transform_log) trimmed |= e.find("national/u") == 0 && e.find("trimmed") != std::string::npos;
    CHECK(trimmed);
  }
  SUBCASE("log and its error message") {
    TransformSpec spec;
    spec.by_variable["y"] = {Directive::kLog, false};
    const PanelDataset d = apply_transforms(tiny_raw({1, std::exp(2.0), 6}), spec);
    CHECK(d.regional(1, 0, 0) == doctest::Approx(2.0));
    try {
      apply_transforms(tiny_raw({1, -2, 6}), spec);
      FAIL("expected an input error");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("A/y") != std::string::npos);
      CHECK(msg.find("2000Q2") != std::string::npos);
    }
  }
  SUBCASE("name clash between blocks") {
    RawPanel raw = tiny_raw({1, 2, 3});
    raw.national_variables = {"y"};
    CHECK_THROWS_AS(apply_transforms(raw, {}), InputError);
  }
}

TEST_CASE("spatial weights") {
  Centroids c;
  c.regions = {"a", "b", "c"};
  SUBCASE("equilateral triangle") {
    c.coords = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
    const WeightMatrix w = inverse_distance_weights(c);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(w(i, j) == doctest::Approx(i == j ? 0.0 : 0.5).epsilon(1e-14));
  }
  SUBCASE("collinear") {
    c.coords = {{0, 0}, {1, 0}, {4, 0}};
    const WeightMatrix w = inverse_distance_weights(c);
    CHECK(w(1, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(w(1, 2) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(w.matrix().rowwise().sum().isOnes(1e-14));
  }
  SUBCASE("spherical") {
    c.convention = CoordinateConvention::kSpherical;
    c.coords = {{0, 0}, {1, 0}, {-1, 0}};
    CHECK(centroid_distance(c, 0, 1) == doctest::Approx(6371.0 * M_PI / 180.0).epsilon(1e-12));
    const WeightMatrix w = inverse_distance_weights(c);
    CHECK(w(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    // Near the pole, longitude differences shrink.
    c.coords = {{0, 89}, {90, 89}, {0, 0}};
    CHECK(centroid_distance(c, 0, 1) < centroid_distance(c, 0, 2) / 50.0);
  }
  SUBCASE("coincident centroids are named") {
    c.coords = {{0, 0}, {2, 2}, {2, 2}};
    try {
      inverse_distance_weights(c);
      FAIL("expected an input error");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("'b'") != std::string::npos);
      CHECK(msg.find("'c'") != std::string::npos);
    }
  }
  SUBCASE("a single region has no weights") {
    c.regions = {"a"};
    c.coords = {{0, 0}};
    CHECK_THROWS_AS(inverse_distance_weights(c), InputError);
  }
}

TEST_CASE("panel csv") {
  SUBCASE("monthly values are averaged to quarters") {
    std::string csv = "region,variable,period,value\n";
    for (int m = 1; m <= 6; ++m) {
      csv += "A,y,2001M" + std::string(m < 10 ? "0" : "") + std::to_string(m) + "," + std::to_string(m) + "\n";
      csv += "national,u,2001-0" + std::to_string(m) + "," + std::to_string(10 * m) + "\n";
    }
    const RawPanel raw = read_panel_csv(write_temp("monthly.csv", csv), tiny_schema());
    REQUIRE(raw.periods() == 2);
    CHECK(raw.first_period == Quarter{2001, 1});
    CHECK(raw.regional(0, 0, 0) == doctest::Approx(2.0));
    CHECK(raw.regional(1, 0, 0) == doctest::Approx(5.0));
    CHECK(raw.national(1, 0) == doctest::Approx(50.0));
  }
  SUBCASE("an incomplete quarter is rejected") {
    const std::string csv =
        "region,variable,period,value\nA,y,2001M01,1\nA,y,2001M02,1\nnational,u,2001Q1,1\n";
    CHECK_THROWS_AS(read_panel_csv(write_temp("partial.csv", csv), tiny_schema()), InputError);
  }
  SUBCASE("quarterly with regions in order of appearance") {
    const std::string csv =
        "region,variable,period,value\nB,y,2001Q1,1\nB,y,2001Q2,2\nA,y,2001Q1,3\nA,y,2001Q2,4\n"
        "national,u,2001Q1,5\nnational,u,2001Q2,6\n";
    const RawPanel raw = read_panel_csv(write_temp("quarterly.csv", csv), tiny_schema());
    CHECK(raw.regions == std::vector<std::string>{"B", "A"});
    CHECK(raw.regional(1, 1, 0) == 4.0);
  }
  SUBCASE("unknown columns and variables") {
    const std::string extra =
        "region,variable,period,value,note\nA,y,2001Q1,1,x\nnational,u,2001Q1,2,x\n";
    CHECK_THROWS_AS(read_panel_csv(write_temp("extra.csv", extra), tiny_schema()), InputError);
    PanelSchema permissive = tiny_schema();
    permissive.permissive = true;
    CHECK(read_panel_csv(write_temp("extra.csv", extra), permissive).periods() == 1);

    const std::string unknown = "region,variable,period,value\nA,y,2001Q1,1\nA,w,2001Q1,1\nnational,u,2001Q1,2\n";
    CHECK_THROWS_AS(read_panel_csv(write_temp("unknown.csv", unknown), tiny_schema()), InputError);
    CHECK(read_panel_csv(write_temp("unknown.csv", unknown), permissive).periods() == 1);
  }
  SUBCASE("duplicates and gaps") {
    const std::string dup = "region,variable,period,value\nA,y,2001Q1,1\nA,y,2001Q1,1\nnational,u,2001Q1,2\n";
    CHECK_THROWS_AS(read_panel_csv(write_temp("dup.csv", dup), tiny_schema()), InputError);
    const std::string gap =
        "region,variable,period,value\nA,y,2001Q1,1\nA,y,2001Q3,1\nnational,u,2001Q1,2\nnational,u,2001Q3,2\n";
    CHECK_THROWS_AS(read_panel_csv(write_temp("gap.csv", gap), tiny_schema()), InputError);
  }
}

TEST_CASE("survey and centroid files") {
  const auto survey = read_survey_csv(
      write_temp("survey.csv", "income,size,weight,year,region\n100,1,1,2000,A\n400,4,2,2000,B\n"), false);
  REQUIRE(survey.size() == 2);
  CHECK(survey[1].region == "B");
  CHECK(survey[1].household_size == 4);
  const auto no_region = read_survey_csv(write_temp("survey2.csv", "income,size,weight,year\n100,1,1,2000\n"), false);
  CHECK(no_region[0].region == "all");
  CHECK_THROWS_AS(read_survey_csv(write_temp("survey3.csv", "income,size,weight,year\n100,0,1,2000\n"), false),
                  InputError);

  const auto c = read_centroids_csv(
      write_temp("centroids.csv", "region,x,y,convention\nb,1,0,planar\na,0,0,planar\n"), {"a", "b"}, false);
  CHECK(c.regions == std::vector<std::string>{"a", "b"});
  CHECK(c.coords[1].x() == 1.0);
  CHECK_THROWS_AS(read_centroids_csv(write_temp("centroids.csv", "region,x,y,convention\na,0,0,planar\n"),
                                     {"a", "b"}, false),
                  InputError);
}
