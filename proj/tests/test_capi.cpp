#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "treeloc/treeloc_c.h"

namespace {

struct ScenarioGuard {
  tl_scenario* p = nullptr;
  ~ScenarioGuard() { tl_scenario_free(p); }
};
struct ResultGuard {
  tl_result* p = nullptr;
  ~ResultGuard() { tl_result_free(p); }
};

}  // namespace

TEST_CASE("default options") {
  tl_solver_options o;
  std::memset(&o, 0x7f, sizeof o);
  tl_default_options(&o);
  CHECK(o.eps_feas == 1e-8);
  CHECK(o.eps_gap == 1e-8);
  CHECK(o.max_iters == 100);
  CHECK(o.gamma == 0.95);
  CHECK(o.sigma_c == 0.4);
  CHECK(o.distributed == 0);
  CHECK(o.root_clique == -1);
  CHECK(o.reg_alpha == 0.0);
  CHECK(o.reg_rho == 0.0);
  CHECK(o.reg_mu == 0.0);
  CHECK(o.collect_trace == 0);
}

TEST_CASE("scenario generate, synthesize, save, load, to_json") {
  ScenarioGuard base, meas, back;
  REQUIRE(tl_scenario_generate(10, 4, 1.0, 1.0, 0.5, 7, &base.p) == TL_OK);
  CHECK(tl_scenario_num_sensors(base.p) == 10);
  CHECK(tl_scenario_num_anchors(base.p) == 4);
  CHECK(tl_scenario_dim(base.p) == 2);
  CHECK(tl_scenario_has_truth(base.p) == 1);

  REQUIRE(tl_scenario_synthesize(base.p, 0.02, 0.02, 99, &meas.p) == TL_OK);

  const char* path = "capi_scenario_test.json";
  REQUIRE(tl_scenario_save(meas.p, path) == TL_OK);
  REQUIRE(tl_scenario_load(path, &back.p) == TL_OK);
  CHECK(tl_scenario_num_sensors(back.p) == 10);

  char *j1 = nullptr, *j2 = nullptr;
  REQUIRE(tl_scenario_to_json(meas.p, &j1) == TL_OK);
  REQUIRE(tl_scenario_to_json(back.p, &j2) == TL_OK);
  CHECK(std::string(j1) == std::string(j2));  // byte-stable round trip
  tl_string_free(j1);
  tl_string_free(j2);
  std::remove(path);
}

TEST_CASE("solve: centralized and distributed agree") {
  ScenarioGuard base, meas;
  REQUIRE(tl_scenario_generate(10, 4, 1.0, 1.0, 0.5, 11, &base.p) == TL_OK);
  REQUIRE(tl_scenario_synthesize(base.p, 0.02, 0.02, 5, &meas.p) == TL_OK);

  tl_solver_options o;
  tl_default_options(&o);
  o.collect_trace = 1;

  ResultGuard rc;
  REQUIRE(tl_solve(meas.p, &o, &rc.p) == TL_OK);
  CHECK(std::string(tl_result_status(rc.p)) == "converged");
  CHECK(tl_result_iterations(rc.p) > 0);
  // mu and feasibility are reported against the original problem, which
  // the internal cost normalization scales back up
  CHECK(tl_result_mu(rc.p) < 1e-3);
  CHECK(tl_result_feasibility(rc.p) < 1e-3);
  CHECK(tl_result_rmse(rc.p) >= 0.0);
  CHECK(tl_result_rmse(rc.p) < 0.2);
  CHECK(tl_result_per_agent_comms(rc.p) == 0);
  CHECK(tl_result_num_agents(rc.p) >= 1);
  CHECK(tl_result_tree_height(rc.p) >= 0);

  o.distributed = 1;
  ResultGuard rd;
  REQUIRE(tl_solve(meas.p, &o, &rd.p) == TL_OK);
  CHECK(std::string(tl_result_status(rd.p)) == "converged");
  CHECK(tl_result_iterations(rd.p) == tl_result_iterations(rc.p));
  CHECK(tl_result_objective(rd.p) ==
        doctest::Approx(tl_result_objective(rc.p)).epsilon(1e-8));
  CHECK(tl_result_per_agent_comms(rd.p) ==
        6LL * tl_result_iterations(rd.p));

  std::vector<double> pc(10 * 2), pd(10 * 2);
  REQUIRE(tl_result_positions(rc.p, pc.data()) == TL_OK);
  REQUIRE(tl_result_positions(rd.p, pd.data()) == TL_OK);
  double diff = 0;
  for (int i = 0; i < 20; ++i) diff = std::max(diff, std::abs(pc[i] - pd[i]));
  CHECK(diff < 1e-6);

  char* text = nullptr;
  REQUIRE(tl_result_commlog_csv(rd.p, &text) == TL_OK);
  CHECK(std::string(text).rfind("iter,pass,agent,msgs,scalars_up,scalars_down",
                                0) == 0);
  tl_string_free(text);
  text = nullptr;
  REQUIRE(tl_result_commlog_csv(rc.p, &text) == TL_OK);
  CHECK(std::string(text).empty());  // centralized: no communication
  tl_string_free(text);
  text = nullptr;
  REQUIRE(tl_result_trace_csv(rd.p, &text) == TL_OK);
  CHECK(std::string(text).rfind("iter,mu,delta,t_p,t_d", 0) == 0);
  tl_string_free(text);
}

TEST_CASE("error codes and messages") {
  tl_scenario* scn = nullptr;
  tl_result* res = nullptr;
  tl_solver_options o;
  tl_default_options(&o);

  CHECK(tl_scenario_generate(10, 4, 1.0, 1.0, 0.5, 7, nullptr) ==
        TL_ERR_INVALID_ARGUMENT);
  CHECK(tl_scenario_generate(0, 4, 1.0, 1.0, 0.5, 7, &scn) ==
        TL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(tl_last_error()).size() > 0);
  CHECK(scn == nullptr);

  CHECK(tl_scenario_load("definitely_missing_file.json", &scn) == TL_ERR_IO);
  CHECK(scn == nullptr);

  const char* bad = "capi_bad_schema_test.json";
  {
    std::ofstream f(bad);
    f << "{\"dim\": 7}";
  }
  CHECK(tl_scenario_load(bad, &scn) == TL_ERR_SCHEMA);
  std::remove(bad);

  CHECK(tl_solve(nullptr, &o, &res) == TL_ERR_INVALID_ARGUMENT);
  CHECK(tl_solve(nullptr, &o, nullptr) == TL_ERR_INVALID_ARGUMENT);
  CHECK(tl_scenario_synthesize(nullptr, 0.1, 0.1, 1, &scn) ==
        TL_ERR_INVALID_ARGUMENT);
  CHECK(tl_result_positions(nullptr, nullptr) == TL_ERR_INVALID_ARGUMENT);

  // negative noise propagates as an invalid argument
  ScenarioGuard base;
  REQUIRE(tl_scenario_generate(6, 4, 1.0, 1.0, 0.6, 3, &base.p) == TL_OK);
  CHECK(tl_scenario_synthesize(base.p, -0.1, 0.1, 1, &scn) ==
        TL_ERR_INVALID_ARGUMENT);
}
