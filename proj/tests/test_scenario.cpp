#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "treeloc/scenario.hpp"

using namespace treeloc;

TEST_CASE("rng stream is deterministic and well ranged") {
  Rng a(42), b(42), c(43);
  bool identical = true, differs = false;
  for (int i = 0; i < 1000; ++i) {
    double ua = a.uniform();
    identical = identical && ua == b.uniform();
    differs = differs || ua != c.uniform();
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
  }
  CHECK(identical);
  CHECK(differs);
  // gaussian moments, loose
  Rng g(7);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = g.gaussian(2.0);
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sum2 / n - 4.0) < 0.15);
}

TEST_CASE("generate_scenario is deterministic and connected") {
  auto s1 = generate_scenario(12, 4, 1.0, 1.0, 0.45, 5);
  auto s2 = generate_scenario(12, 4, 1.0, 1.0, 0.45, 5);
  REQUIRE(s1.sensors_true.has_value());
  CHECK(*s1.sensors_true == *s2.sensors_true);
  CHECK(s1.seed == s2.seed);
  CHECK(s1.anchors.rows() == 4);
  CHECK(s1.n_sensors == 12);
  // the graph is populated by measurement synthesis and is connected
  CHECK(synthesize_measurements(s1, 0.0, 0.0, 1).measurement_graph().connected());
  for (int i = 0; i < s1.sensors_true->rows(); ++i) {
    CHECK((*s1.sensors_true)(i, 0) >= 0.0);
    CHECK((*s1.sensors_true)(i, 0) <= 1.0);
  }
  CHECK_THROWS_AS(generate_scenario(0, 4, 1.0, 1.0, 0.3, 5), std::invalid_argument);
  CHECK_THROWS_AS(generate_scenario(5, 4, -1.0, 1.0, 0.3, 5), std::invalid_argument);
}

TEST_CASE("synthesize_measurements: values, variances, determinism") {
  auto base = generate_scenario(10, 4, 1.0, 1.0, 0.5, 9);
  auto clean = synthesize_measurements(base, 0.0, 0.0, 100);
  const auto& T = *base.sensors_true;
  for (const auto& m : clean.range_measurements) {
    double d = (T.row(m.i) - T.row(m.j)).norm();
    CHECK(m.value == doctest::Approx(d).epsilon(1e-12));
    CHECK(m.variance == 1.0);  // unit weights for noise-free data
    CHECK(m.i < m.j);
  }
  for (const auto& m : clean.anchor_measurements) {
    double d = (T.row(m.i) - base.anchors.row(m.j)).norm();
    CHECK(m.value == doctest::Approx(d).epsilon(1e-12));
    CHECK(m.variance == 1.0);
  }
  auto noisy1 = synthesize_measurements(base, 0.05, 0.05, 100);
  auto noisy2 = synthesize_measurements(base, 0.05, 0.05, 100);
  REQUIRE(noisy1.range_measurements.size() == noisy2.range_measurements.size());
  double max_dev = 0.0;
  for (size_t i = 0; i < noisy1.range_measurements.size(); ++i) {
    CHECK(noisy1.range_measurements[i].value == noisy2.range_measurements[i].value);
    CHECK(noisy1.range_measurements[i].variance == doctest::Approx(0.0025));
    CHECK(noisy1.range_measurements[i].value >= 0.0);
    double d = (T.row(noisy1.range_measurements[i].i) -
                T.row(noisy1.range_measurements[i].j))
                   .norm();
    max_dev = std::max(max_dev, std::abs(noisy1.range_measurements[i].value - d));
  }
  CHECK(max_dev > 0.0);
  CHECK(max_dev < 0.5);  // 10 sigma
  CHECK_THROWS_AS(synthesize_measurements(base, -0.1, 0.0, 1), std::invalid_argument);
}

TEST_CASE("scenario JSON round trip") {
  auto scn = synthesize_measurements(generate_scenario(8, 4, 0.8, 0.8, 0.5, 3),
                                     0.01, 0.01, 33);
  std::string text = scenario_to_json(scn);
  NetworkScenario back = scenario_from_json(text);
  CHECK(back.dim == scn.dim);
  CHECK(back.rc == scn.rc);
  CHECK(back.seed == scn.seed);
  CHECK(back.n_sensors == scn.n_sensors);
  CHECK(back.anchors == scn.anchors);
  REQUIRE(back.sensors_true.has_value());
  CHECK((*back.sensors_true - *scn.sensors_true).lpNorm<Eigen::Infinity>() <
        1e-12);
  REQUIRE(back.range_measurements.size() == scn.range_measurements.size());
  for (size_t i = 0; i < back.range_measurements.size(); ++i) {
    CHECK(back.range_measurements[i].i == scn.range_measurements[i].i);
    CHECK(back.range_measurements[i].j == scn.range_measurements[i].j);
    CHECK(back.range_measurements[i].value ==
          doctest::Approx(scn.range_measurements[i].value).epsilon(1e-14));
  }
  // serialization is deterministic
  CHECK(scenario_to_json(back) == text);
}

TEST_CASE("scenario file I/O and error paths") {
  auto scn = synthesize_measurements(generate_scenario(6, 4, 1.0, 1.0, 0.6, 2),
                                     0.0, 0.0, 20);
  std::string path = "scenario_io_test.json";
  save_scenario(scn, path);
  NetworkScenario back = load_scenario(path);
  CHECK(back.n_sensors == scn.n_sensors);
  std::remove(path.c_str());

  CHECK_THROWS(load_scenario("definitely_missing_file.json"));
  CHECK_THROWS(scenario_from_json("{ not json"));
  CHECK_THROWS(scenario_from_json("{}"));  // missing fields
  // schema violations
  std::string text = scenario_to_json(scn);
  CHECK_THROWS(scenario_from_json([&] {
    std::string t = text;
    auto pos = t.find("\"dim\": 2");
    return t.replace(pos, 8, "\"dim\": 7");
  }()));
}

TEST_CASE("rmse definition and errors") {
  Eigen::MatrixXd truth(2, 2), est(2, 2);
  truth << 0, 0, 1, 0;
  est << 0, 0.3, 1, 0.4;
  // sqrt((0.09+0.16)/2)
  CHECK(rmse(truth, {est}) == doctest::Approx(std::sqrt(0.125)));
  CHECK(rmse(truth, {truth}) == doctest::Approx(0.0));
  CHECK(rmse(truth, {truth, est}) == doctest::Approx(std::sqrt(0.0625)));
  CHECK_THROWS_AS(rmse(truth, {}), std::invalid_argument);
}
