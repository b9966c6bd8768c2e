#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "treeloc/graph.hpp"
#include "treeloc/pdipm.hpp"
#include "treeloc/relaxation.hpp"
#include "treeloc/scenario.hpp"

using namespace treeloc;

namespace {

struct Fixture {
  NetworkScenario scn;
  CliqueTree tree;
  GlobalVariableIndex index;
  std::vector<AgentSubproblem> subs;
  Eigen::VectorXd y0;
};

Fixture make_fixture(int n, double sigma, std::int64_t seed, double rc = 0.55) {
  Fixture f;
  f.scn = synthesize_measurements(generate_scenario(n, 4, 1.0, 1.0, rc, seed),
                                  sigma, sigma, seed + 1000);
  f.tree =
      build_clique_tree(enumerate_cliques(chordal_embed(f.scn.measurement_graph())));
  auto asg = assign_measurements(f.tree, f.scn);
  std::tie(f.index, f.subs) = build_subproblems(f.tree, asg, f.scn);
  f.y0 = initial_y(f.index, f.scn);
  return f;
}

// Residual oracle computed directly from the definitions, independent of
// the solver's assembly code.
void check_residuals_against_oracle(const Fixture& f, const IterateState& st,
                                    double delta, const Scalings& scalings,
                                    const Residuals& res) {
  Eigen::VectorXd r_d_lin = Eigen::VectorXd::Zero(f.index.n_y);
  for (size_t k = 0; k < f.subs.size(); ++k) {
    const auto& sp = f.subs[k];
    const auto& J = f.index.J[k];
    Eigen::VectorXd y_J(J.size());
    for (size_t p = 0; p < J.size(); ++p) y_J[p] = st.y[J[p]];

    Eigen::VectorXd contrib = -sp.c - sp.W.transpose() * st.v[k] -
                              sp.A.transpose() * st.v_bar[k] -
                              sp.D.transpose() * st.lambda[k];
    CHECK((res.r_d_lin_k[k] - contrib).lpNorm<Eigen::Infinity>() < 1e-12);
    for (size_t p = 0; p < J.size(); ++p) r_d_lin[J[p]] += contrib[p];

    Eigen::VectorXd x = st.x_stacked(static_cast<int>(k));
    Eigen::VectorXd z = st.z_stacked(static_cast<int>(k));
    CHECK((res.r_p[k] - (sp.b - sp.Q * x - sp.W * y_J)).lpNorm<Eigen::Infinity>() <
          1e-12);
    CHECK((res.r_p_lin[k] - (sp.b_bar - sp.A * y_J)).lpNorm<Eigen::Infinity>() <
          1e-12);
    CHECK((res.r_d[k] - (z - sp.Q.transpose() * st.v[k])).lpNorm<Eigen::Infinity>() <
          1e-12);

    int at = 0;
    for (size_t j = 0; j < st.X[k].size(); ++j) {
      const int o = sp.block_orders[j];
      const Eigen::MatrixXd G = scalings[k][j].G;
      const Eigen::MatrixXd Gi = scalings[k][j].G_inv;
      Eigen::MatrixXd M = st.X[k][j] * st.Z[k][j];
      Eigen::MatrixXd T = Gi * M * G;
      Eigen::MatrixXd H = 0.5 * (T + T.transpose());
      Eigen::VectorXd rc =
          svec(delta * Eigen::MatrixXd::Identity(o, o) - H, 1e-6);
      CHECK((res.r_c[k].segment(at, rc.size()) - rc).lpNorm<Eigen::Infinity>() <
            1e-10);
      at += static_cast<int>(rc.size());
    }
    if (sp.D.rows() > 0) {
      Eigen::VectorXd e = sp.D * y_J - sp.g;
      Eigen::VectorXd rcl =
          (-delta - st.lambda[k].array() * e.array()).matrix();
      CHECK((res.r_c_lin[k] - rcl).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
  CHECK((res.r_d_lin - r_d_lin).lpNorm<Eigen::Infinity>() < 1e-12);
}

}  // namespace

TEST_CASE("initial iterate: identity blocks, unit multipliers, interior y0") {
  Fixture f = make_fixture(8, 0.05, 2);
  IterateState st = initial_iterate(f.index, f.subs, f.y0);
  for (size_t k = 0; k < f.subs.size(); ++k) {
    for (const auto& B : st.X[k]) CHECK(B.isIdentity(0.0));
    for (const auto& B : st.Z[k]) CHECK(B.isIdentity(0.0));
    CHECK(st.v[k].isZero(0.0));
    CHECK(st.v_bar[k].isZero(0.0));
    CHECK((st.lambda[k].array() == 1.0).all());
  }
  CHECK(st.delta == duality_measure(st, f.index, f.subs));
  // infeasible start (zero D/Z slots) is rejected
  CHECK_THROWS_AS(initial_iterate(f.index, f.subs,
                                  Eigen::VectorXd::Zero(f.index.n_y)),
                  std::invalid_argument);
  CHECK_THROWS_AS(initial_iterate(f.index, f.subs, Eigen::VectorXd::Ones(3)),
                  std::invalid_argument);
}

TEST_CASE("initial_y floors the measured slots") {
  Fixture f = make_fixture(8, 0.0, 3);
  for (size_t m = 0; m < f.scn.range_measurements.size(); ++m)
    CHECK(f.y0[f.index.dcap_idx[m]] ==
          std::max(f.scn.range_measurements[m].value, 0.1));
  for (size_t m = 0; m < f.scn.anchor_measurements.size(); ++m)
    CHECK(f.y0[f.index.zslack_idx[m]] ==
          std::max(f.scn.anchor_measurements[m].value, 0.1));
}

TEST_CASE("residuals match an independent oracle, including after a step") {
  Fixture f = make_fixture(7, 0.05, 5);
  IterateState st = initial_iterate(f.index, f.subs, f.y0);
  Scalings sc = compute_scalings(st, f.subs);
  Residuals res = compute_residuals(st, f.index, f.subs, st.delta, sc);
  check_residuals_against_oracle(f, st, st.delta, sc, res);

  SearchDirection dir = solve_kkt_centralized(st, f.index, f.subs, res, sc);
  auto [tp, td] = step_sizes(st, f.index, f.subs, dir, 0.95);
  apply_step(st, f.subs, dir, tp, td);
  st.delta *= 0.3;
  sc = compute_scalings(st, f.subs);
  res = compute_residuals(st, f.index, f.subs, st.delta, sc);
  check_residuals_against_oracle(f, st, st.delta, sc, res);
}

TEST_CASE("centralized direction satisfies the full linearized KKT system") {
  for (auto seed : {1, 2, 3}) {
    Fixture f = make_fixture(6 + seed, 0.05, seed);
    IterateState st = initial_iterate(f.index, f.subs, f.y0);
    Scalings sc = compute_scalings(st, f.subs);
    Residuals res = compute_residuals(st, f.index, f.subs, st.delta, sc);
    SearchDirection dir = solve_kkt_centralized(st, f.index, f.subs, res, sc);
    CHECK(direction_residual(st, f.index, f.subs, res, sc, dir) < 1e-10);
  }
}

TEST_CASE("direction is linear in the residuals") {
  Fixture f = make_fixture(6, 0.05, 9);
  IterateState st = initial_iterate(f.index, f.subs, f.y0);
  Scalings sc = compute_scalings(st, f.subs);
  Residuals res = compute_residuals(st, f.index, f.subs, st.delta, sc);
  SearchDirection d1 = solve_kkt_centralized(st, f.index, f.subs, res, sc);
  Residuals res2 = res;
  res2.r_d_lin *= 2.0;
  for (size_t k = 0; k < f.subs.size(); ++k) {
    res2.r_d_lin_k[k] *= 2.0;
    res2.r_d[k] *= 2.0;
    res2.r_c[k] *= 2.0;
    res2.r_c_lin[k] *= 2.0;
    res2.r_p[k] *= 2.0;
    res2.r_p_lin[k] *= 2.0;
  }
  SearchDirection d2 = solve_kkt_centralized(st, f.index, f.subs, res2, sc);
  CHECK((d2.dy - 2.0 * d1.dy).lpNorm<Eigen::Infinity>() <
        1e-8 * (1.0 + d1.dy.lpNorm<Eigen::Infinity>()));
  for (size_t k = 0; k < f.subs.size(); ++k)
    CHECK((d2.dx[k] - 2.0 * d1.dx[k]).lpNorm<Eigen::Infinity>() <
          1e-8 * (1.0 + d1.dx[k].lpNorm<Eigen::Infinity>()));
}

TEST_CASE("fraction-to-boundary step sizes") {
  Fixture f = make_fixture(6, 0.02, 4);
  IterateState st = initial_iterate(f.index, f.subs, f.y0);  // X = Z = I
  SearchDirection dir;
  dir.dy = Eigen::VectorXd::Zero(f.index.n_y);
  for (size_t k = 0; k < f.subs.size(); ++k) {
    const auto& sp = f.subs[k];
    Eigen::VectorXd dx(sp.n_x()), dz(sp.n_x());
    int at = 0;
    for (int o : sp.block_orders) {
      dx.segment(at, svec_size(o)) =
          svec(Eigen::MatrixXd(-2.0 * Eigen::MatrixXd::Identity(o, o)));
      dz.segment(at, svec_size(o)) =
          svec(Eigen::MatrixXd(-3.0 * Eigen::MatrixXd::Identity(o, o)));
      at += svec_size(o);
    }
    dir.dx.push_back(dx);
    dir.dz.push_back(dz);
    dir.dv.push_back(Eigen::VectorXd::Zero(sp.n_x()));
    dir.dv_bar.push_back(Eigen::VectorXd::Zero(sp.A.rows()));
    dir.dlambda.push_back(Eigen::VectorXd(-2.0 * st.lambda[k]));
  }
  // X = I, dX = -2I -> boundary at 1/2; Z: 1/3; lambda: 1/2
  auto [bp, bd] = agent_step_bounds(st, f.index, f.subs, dir, 0);
  CHECK(bp == doctest::Approx(0.5));
  CHECK(bd == doctest::Approx(1.0 / 3.0));
  auto [tp, td] = step_sizes(st, f.index, f.subs, dir, 0.95);
  CHECK(tp == doctest::Approx(0.95 * 0.5));
  CHECK(td == doctest::Approx(0.95 / 3.0));
  // zero direction -> unit steps
  for (size_t k = 0; k < f.subs.size(); ++k) {
    dir.dx[k].setZero();
    dir.dz[k].setZero();
    dir.dlambda[k].setZero();
  }
  std::tie(tp, td) = step_sizes(st, f.index, f.subs, dir, 0.95);
  CHECK(tp == 1.0);
  CHECK(td == 1.0);
}

TEST_CASE("zero-noise solve: exactness and final interiority") {
  Fixture f = make_fixture(6, 0.0, 7);
  SolverOptions opts;
  auto res = solve_centralized(f.index, f.subs, f.y0, opts);
  CHECK(res.status == "converged");
  CHECK(std::abs(res.objective) < 1e-6);
  CHECK(res.mu_final < 1e-6);
  Eigen::MatrixXd est = extract_positions(f.index, res.y);
  CHECK(rmse(*f.scn.sensors_true, {est}) < 0.2);
  const IterateState& st = res.final_state;
  for (size_t k = 0; k < f.subs.size(); ++k) {
    for (const auto& B : st.X[k]) CHECK(is_positive_definite(B));
    for (const auto& B : st.Z[k]) CHECK(is_positive_definite(B));
    CHECK((st.lambda[k].array() > 0).all());
    Eigen::VectorXd y_J(f.index.J[k].size());
    for (size_t p = 0; p < f.index.J[k].size(); ++p) y_J[p] = st.y[f.index.J[k][p]];
    CHECK(((f.subs[k].D * y_J - f.subs[k].g).array() < 0).all());
  }
  CHECK(static_cast<int>(res.trace.size()) == res.iterations);
}

TEST_CASE("reported mu and feasibility refer to the original problem") {
  Fixture f = make_fixture(8, 0.1, 11);
  SolverOptions opts;
  auto res = solve_centralized(f.index, f.subs, f.y0, opts);
  REQUIRE(res.status == "converged");
  CHECK(res.mu_final ==
        doctest::Approx(duality_measure(res.final_state, f.index, f.subs))
            .epsilon(1e-14));
  auto norms = feasibility_norms(res.final_state, f.index, f.subs);
  double feas = *std::max_element(norms.begin(), norms.end()) /
                (1.0 + rhs_norm(f.subs));
  CHECK(res.feas_final == doctest::Approx(feas).epsilon(1e-14));
  CHECK(res.objective ==
        doctest::Approx(evaluate_objective(f.index, f.subs, res.y)).epsilon(1e-14));
}

TEST_CASE("iteration limit and failure statuses") {
  Fixture f = make_fixture(6, 0.05, 13);
  SolverOptions opts;
  opts.max_iters = 2;
  auto res = solve_centralized(f.index, f.subs, f.y0, opts);
  CHECK(res.status == "max-iterations");
  CHECK(res.iterations == 2);

  auto throwing = [](const IterateState&, const Residuals&, const Scalings&,
                     int) -> SearchDirection {
    throw std::runtime_error("boom");
  };
  SolverOptions opts2;
  auto res2 = run_pdipm(f.index, f.subs, f.y0, opts2, throwing);
  CHECK(res2.status == "kkt-singular");
  CHECK(res2.iterations == 0);
}

TEST_CASE("cost normalization is an exact reformulation") {
  Fixture f = make_fixture(7, 0.05, 17);
  double s = cost_normalization(f.subs);
  CHECK(s >= 1.0);
  auto scaled = scale_costs(f.subs, 1.0 / s);
  double cmax = 0.0;
  for (const auto& sp : scaled)
    if (sp.c.size() > 0) cmax = std::max(cmax, sp.c.lpNorm<Eigen::Infinity>());
  CHECK(cmax <= 1.0 + 1e-12);
  Eigen::VectorXd y = f.y0;
  CHECK(evaluate_objective(f.index, scaled, y) * s ==
        doctest::Approx(evaluate_objective(f.index, f.subs, y)).epsilon(1e-12));
}
