#include "treeloc/treeloc_c.h"

#include <cstring>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <string>

#include "treeloc/graph.hpp"
#include "treeloc/msgpass.hpp"
#include "treeloc/pdipm.hpp"
#include "treeloc/relaxation.hpp"
#include "treeloc/scenario.hpp"

struct tl_scenario {
  treeloc::NetworkScenario scn;
};

struct tl_result {
  std::string status;
  Eigen::MatrixXd positions;
  double objective = 0.0;
  int iterations = 0;
  double mu = 0.0;
  double feas = 0.0;
  double rmse = -1.0;
  int tree_height = 0;
  int n_agents = 0;
  long long per_agent_comms = 0;
  std::string commlog_csv;
  std::string trace_csv;
};

namespace {

thread_local std::string g_last_error;

tl_status classify(const std::exception& e, tl_status fallback) {
  g_last_error = e.what();
  if (dynamic_cast<const std::invalid_argument*>(&e))
    return TL_ERR_INVALID_ARGUMENT;
  const std::string msg = e.what();
  if (msg.find("cannot open") != std::string::npos ||
      msg.find("cannot write") != std::string::npos)
    return TL_ERR_IO;
  if (msg.rfind("scenario:", 0) == 0) return TL_ERR_SCHEMA;
  return fallback;
}

template <typename Fn>
tl_status guarded(tl_status fallback, Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const std::exception& e) {
    return classify(e, fallback);
  } catch (...) {
    g_last_error = "unknown error";
    return TL_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tl_status require(bool ok, const char* msg) {
  if (ok) return TL_OK;
  g_last_error = msg;
  return TL_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* tl_last_error(void) { return g_last_error.c_str(); }

void tl_default_options(tl_solver_options* opts) {
  if (!opts) return;
  treeloc::SolverOptions d;
  opts->eps_feas = d.eps_feas;
  opts->eps_gap = d.eps_gap;
  opts->max_iters = d.max_iters;
  opts->gamma = d.gamma;
  opts->sigma_c = d.sigma_c;
  opts->distributed = 0;
  opts->root_clique = -1;
  opts->reg_alpha = 0.0;
  opts->reg_rho = 0.0;
  opts->reg_mu = 0.0;
  opts->collect_trace = 0;
}

tl_status tl_scenario_generate(int n_sensors, int n_anchors, double area_w,
                               double area_h, double r_c, int64_t seed,
                               tl_scenario** out) {
  if (tl_status s = require(out != nullptr, "tl_scenario_generate: null output"))
    return s;
  return guarded(TL_ERR_INTERNAL, [&] {
    *out = new tl_scenario{treeloc::generate_scenario(n_sensors, n_anchors, area_w,
                                                      area_h, r_c, seed)};
    return TL_OK;
  });
}

tl_status tl_scenario_synthesize(const tl_scenario* in, double sigma_range,
                                 double sigma_anchor, int64_t seed,
                                 tl_scenario** out) {
  if (tl_status s = require(in && out, "tl_scenario_synthesize: null argument"))
    return s;
  return guarded(TL_ERR_INTERNAL, [&] {
    *out = new tl_scenario{
        treeloc::synthesize_measurements(in->scn, sigma_range, sigma_anchor, seed)};
    return TL_OK;
  });
}

tl_status tl_scenario_load(const char* path, tl_scenario** out) {
  if (tl_status s = require(path && out, "tl_scenario_load: null argument"))
    return s;
  return guarded(TL_ERR_SCHEMA, [&] {
    *out = new tl_scenario{treeloc::load_scenario(path)};
    return TL_OK;
  });
}

tl_status tl_scenario_save(const tl_scenario* scn, const char* path) {
  if (tl_status s = require(scn && path, "tl_scenario_save: null argument"))
    return s;
  return guarded(TL_ERR_IO, [&] {
    treeloc::save_scenario(scn->scn, path);
    return TL_OK;
  });
}

tl_status tl_scenario_to_json(const tl_scenario* scn, char** out_text) {
  if (tl_status s = require(scn && out_text, "tl_scenario_to_json: null argument"))
    return s;
  return guarded(TL_ERR_INTERNAL, [&] {
    *out_text = dup_string(treeloc::scenario_to_json(scn->scn));
    return TL_OK;
  });
}

void tl_scenario_free(tl_scenario* scn) { delete scn; }

int tl_scenario_num_sensors(const tl_scenario* scn) {
  return scn ? scn->scn.n_sensors : 0;
}

int tl_scenario_num_anchors(const tl_scenario* scn) {
  return scn ? static_cast<int>(scn->scn.anchors.rows()) : 0;
}

int tl_scenario_dim(const tl_scenario* scn) { return scn ? scn->scn.dim : 0; }

int tl_scenario_has_truth(const tl_scenario* scn) {
  return scn && scn->scn.sensors_true.has_value() ? 1 : 0;
}

tl_status tl_solve(const tl_scenario* scn, const tl_solver_options* opts,
                   tl_result** out) {
  if (tl_status s = require(scn && opts && out, "tl_solve: null argument")) return s;
  return guarded(TL_ERR_SOLVER, [&] {
    using namespace treeloc;
    ChordalEmbedding emb = chordal_embed(scn->scn.measurement_graph());
    CliqueTree tree = build_clique_tree(enumerate_cliques(emb), opts->root_clique);
    Assignment asg = assign_measurements(tree, scn->scn);
    auto [index, subs] = build_subproblems(tree, asg, scn->scn);
    if (opts->reg_alpha != 0.0 || opts->reg_rho != 0.0 || opts->reg_mu != 0.0)
      add_trace_regularization(index, subs, opts->reg_alpha, opts->reg_rho,
                               opts->reg_mu);
    SolverOptions so;
    so.eps_feas = opts->eps_feas;
    so.eps_gap = opts->eps_gap;
    so.max_iters = opts->max_iters;
    so.gamma = opts->gamma;
    so.sigma_c = opts->sigma_c;
    so.collect_trace = opts->collect_trace != 0;
    Eigen::VectorXd y0 = initial_y(index, scn->scn);

    auto res = new tl_result;
    SolveResult sr;
    if (opts->distributed) {
      DistributedResult dr = solve_distributed(tree, index, subs, y0, so);
      sr = std::move(dr.result);
      res->commlog_csv = dr.log.to_csv();
      if (!dr.log.records.empty())
        res->per_agent_comms = dr.log.per_agent_comms().front();
    } else {
      sr = solve_centralized(index, subs, y0, so);
    }
    res->status = sr.status;
    res->positions = extract_positions(index, sr.y);
    res->objective = sr.objective;
    res->iterations = sr.iterations;
    res->mu = sr.mu_final;
    res->feas = sr.feas_final;
    res->tree_height = tree.height();
    res->n_agents = tree.size();
    if (scn->scn.sensors_true)
      res->rmse = rmse(*scn->scn.sensors_true, {res->positions});
    if (so.collect_trace) {
      std::ostringstream os;
      os << "iter,mu,delta,t_p,t_d,norm_r_p,norm_r_p_lin,norm_r_d,norm_r_d_lin\n";
      for (const auto& r : sr.trace)
        os << r.iter << ',' << r.mu << ',' << r.delta << ',' << r.t_p << ','
           << r.t_d << ',' << r.norm_r_p << ',' << r.norm_r_p_lin << ','
           << r.norm_r_d << ',' << r.norm_r_d_lin << '\n';
      res->trace_csv = os.str();
    }
    *out = res;
    return TL_OK;
  });
}

void tl_result_free(tl_result* res) { delete res; }

const char* tl_result_status(const tl_result* res) {
  return res ? res->status.c_str() : "";
}

int tl_result_iterations(const tl_result* res) { return res ? res->iterations : 0; }

double tl_result_objective(const tl_result* res) { return res ? res->objective : 0; }

double tl_result_mu(const tl_result* res) { return res ? res->mu : 0; }

double tl_result_feasibility(const tl_result* res) { return res ? res->feas : 0; }

double tl_result_rmse(const tl_result* res) { return res ? res->rmse : -1.0; }

int tl_result_tree_height(const tl_result* res) { return res ? res->tree_height : 0; }

int tl_result_num_agents(const tl_result* res) { return res ? res->n_agents : 0; }

int64_t tl_result_per_agent_comms(const tl_result* res) {
  return res ? res->per_agent_comms : 0;
}

tl_status tl_result_positions(const tl_result* res, double* out_xy) {
  if (tl_status s = require(res && out_xy, "tl_result_positions: null argument"))
    return s;
  for (int i = 0; i < res->positions.rows(); ++i)
    for (int j = 0; j < res->positions.cols(); ++j)
      out_xy[i * res->positions.cols() + j] = res->positions(i, j);
  return TL_OK;
}

tl_status tl_result_commlog_csv(const tl_result* res, char** out_text) {
  if (tl_status s = require(res && out_text, "tl_result_commlog_csv: null argument"))
    return s;
  *out_text = dup_string(res->commlog_csv);
  return TL_OK;
}

tl_status tl_result_trace_csv(const tl_result* res, char** out_text) {
  if (tl_status s = require(res && out_text, "tl_result_trace_csv: null argument"))
    return s;
  *out_text = dup_string(res->trace_csv);
  return TL_OK;
}

void tl_string_free(char* text) { delete[] text; }

}  // extern "C"
