#ifndef TREELOC_C_H
#define TREELOC_C_H

/* C interface to the localization solver library. All functions returning
 * tl_status set a thread-local error message retrievable with
 * tl_last_error() on failure. Objects are opaque; free them with the
 * matching *_free function. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  TL_OK = 0,
  TL_ERR_INVALID_ARGUMENT = 1,
  TL_ERR_IO = 2,
  TL_ERR_SCHEMA = 3,
  TL_ERR_SOLVER = 4,
  TL_ERR_INTERNAL = 5
} tl_status;

typedef struct tl_scenario tl_scenario;
typedef struct tl_result tl_result;

typedef struct tl_solver_options {
  double eps_feas;   /* feasibility tolerance (default 1e-8) */
  double eps_gap;    /* duality-measure tolerance (default 1e-8) */
  int max_iters;     /* default 100 */
  double gamma;      /* fraction-to-boundary (default 0.95) */
  double sigma_c;    /* centering parameter (default 0.4) */
  int distributed;   /* 0 = centralized, 1 = message passing (default 0) */
  int root_clique;   /* clique index, or -1 = auto (largest clique) */
  double reg_alpha;  /* trace-regularization weights (default 0) */
  double reg_rho;
  double reg_mu;
  int collect_trace; /* keep the per-iteration trace (default 0) */
} tl_solver_options;

/* Last error message for the calling thread; empty string when none. */
const char* tl_last_error(void);

void tl_default_options(tl_solver_options* opts);

/* ---- scenarios ---- */

/* Random connected scenario: sensors uniform in [0,w]x[0,h], anchors on a
 * grid; no measurements yet (see tl_scenario_synthesize). */
tl_status tl_scenario_generate(int n_sensors, int n_anchors, double area_w,
                               double area_h, double r_c, int64_t seed,
                               tl_scenario** out);

/* Noisy range/anchor measurements for every edge of the measurement
 * graph; requires true positions. */
tl_status tl_scenario_synthesize(const tl_scenario* in, double sigma_range,
                                 double sigma_anchor, int64_t seed,
                                 tl_scenario** out);

tl_status tl_scenario_load(const char* path, tl_scenario** out);
tl_status tl_scenario_save(const tl_scenario* scn, const char* path);
tl_status tl_scenario_to_json(const tl_scenario* scn, char** out_text);
void tl_scenario_free(tl_scenario* scn);

int tl_scenario_num_sensors(const tl_scenario* scn);
int tl_scenario_num_anchors(const tl_scenario* scn);
int tl_scenario_dim(const tl_scenario* scn);
int tl_scenario_has_truth(const tl_scenario* scn);

/* ---- solving ---- */

/* Builds the semidefinite relaxation over the clique tree of the chordal
 * embedding and runs the interior-point solver. Returns TL_OK whenever a
 * result object is produced; inspect tl_result_status for convergence
 * ("converged", "max-iterations", "kkt-singular"). */
tl_status tl_solve(const tl_scenario* scn, const tl_solver_options* opts,
                   tl_result** out);
void tl_result_free(tl_result* res);

const char* tl_result_status(const tl_result* res);
int tl_result_iterations(const tl_result* res);
double tl_result_objective(const tl_result* res);
double tl_result_mu(const tl_result* res);
double tl_result_feasibility(const tl_result* res);
/* RMSE against the scenario's true positions; negative when absent. */
double tl_result_rmse(const tl_result* res);
int tl_result_tree_height(const tl_result* res);
int tl_result_num_agents(const tl_result* res);
/* Per-agent communication count (6p); 0 for the centralized solver. */
int64_t tl_result_per_agent_comms(const tl_result* res);

/* Estimated positions, row-major n_sensors x dim; buffer must hold
 * tl_scenario_num_sensors * tl_scenario_dim doubles. */
tl_status tl_result_positions(const tl_result* res, double* out_xy);

/* Communication log CSV (distributed runs; empty otherwise). */
tl_status tl_result_commlog_csv(const tl_result* res, char** out_text);
/* Per-iteration trace CSV (when collect_trace was set). */
tl_status tl_result_trace_csv(const tl_result* res, char** out_text);

void tl_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* TREELOC_C_H */
