#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "treeloc/relaxation.hpp"
#include "treeloc/sdplinalg.hpp"

// Centralized primal-dual interior-point method for the coupled SDP.
// Residuals, NT scalings and the iteration loop here are shared with the
// message-passing solver, which only swaps the KKT solve.

namespace treeloc {

struct IterateState {
  Eigen::VectorXd y;
  std::vector<std::vector<Eigen::MatrixXd>> X;  // [agent][block], SPD
  std::vector<std::vector<Eigen::MatrixXd>> Z;  // [agent][block], SPD
  std::vector<Eigen::VectorXd> v;       // coupling-equality duals
  std::vector<Eigen::VectorXd> v_bar;   // linear-equality duals
  std::vector<Eigen::VectorXd> lambda;  // inequality multipliers, > 0
  double delta = 1.0;                   // perturbation parameter

  Eigen::VectorXd x_stacked(int agent) const;  // svec of all blocks
  Eigen::VectorXd z_stacked(int agent) const;
};

struct Residuals {
  Eigen::VectorXd r_d_lin;                   // global, n_y
  std::vector<Eigen::VectorXd> r_d_lin_k;    // per-agent slice over J_k
  std::vector<Eigen::VectorXd> r_d;          // per agent, n_x
  std::vector<Eigen::VectorXd> r_c;          // per agent, n_x
  std::vector<Eigen::VectorXd> r_c_lin;      // per agent, n_ineq
  std::vector<Eigen::VectorXd> r_p;          // per agent, n_x
  std::vector<Eigen::VectorXd> r_p_lin;      // per agent, n_lin
};

struct SearchDirection {
  Eigen::VectorXd dy;
  std::vector<Eigen::VectorXd> dx, dz, dv, dv_bar, dlambda;
};

struct SolverOptions {
  double eps_feas = 1e-8;
  double eps_gap = 1e-8;
  int max_iters = 100;
  double gamma = 0.95;    // fraction-to-boundary
  double sigma_c = 0.4;   // centering
  bool collect_trace = true;
};

struct IterationRecord {
  int iter = 0;
  double mu = 0, delta = 0, t_p = 0, t_d = 0;
  double norm_r_p = 0, norm_r_p_lin = 0, norm_r_d = 0, norm_r_d_lin = 0;
};

struct SolveResult {
  std::string status;  // "converged", "max-iterations", "kkt-singular"
  Eigen::VectorXd y;
  std::vector<std::vector<Eigen::MatrixXd>> X;
  double objective = 0.0;
  int iterations = 0;
  double mu_final = 0.0;
  double feas_final = 0.0;  // max scaled feasibility residual norm
  std::vector<IterationRecord> trace;
  IterateState final_state;
};

using Scalings = std::vector<std::vector<ScalingPoint>>;

// X = Z = I, lambda = 1, v = v_bar = 0, y = y0 (must satisfy D y0 < g
// strictly); delta set to the duality measure of this point.
IterateState initial_iterate(const GlobalVariableIndex& index,
                             const std::vector<AgentSubproblem>& subs,
                             const Eigen::VectorXd& y0);

Scalings compute_scalings(const IterateState& state,
                          const std::vector<AgentSubproblem>& subs);

Residuals compute_residuals(const IterateState& state, const GlobalVariableIndex& index,
                            const std::vector<AgentSubproblem>& subs, double delta,
                            const Scalings& scalings);

// Per-agent complementarity contribution (<X,Z> + lambda^T (g - D y), order count).
std::pair<double, double> agent_complementarity(const IterateState& state,
                                                const GlobalVariableIndex& index,
                                                const std::vector<AgentSubproblem>& subs,
                                                int agent);

double duality_measure(const IterateState& state, const GlobalVariableIndex& index,
                       const std::vector<AgentSubproblem>& subs);

// Largest t keeping agent `k` feasible: (primal bound for X / inequalities,
// dual bound for Z / lambda). Bounds may be +inf.
std::pair<double, double> agent_step_bounds(const IterateState& state,
                                            const GlobalVariableIndex& index,
                                            const std::vector<AgentSubproblem>& subs,
                                            const SearchDirection& dir, int agent);

// In-place update y/X by t_p and v/v_bar/lambda/Z by t_d.
void apply_step(IterateState& state, const std::vector<AgentSubproblem>& subs,
                const SearchDirection& dir, double t_p, double t_d);

std::pair<double, double> step_sizes(const IterateState& state,
                                     const GlobalVariableIndex& index,
                                     const std::vector<AgentSubproblem>& subs,
                                     const SearchDirection& dir, double gamma);

// Dense solve of the reduced saddle-point system, then recovery of
// (dz, dlambda) by back-substitution.
SearchDirection solve_kkt_centralized(const IterateState& state,
                                      const GlobalVariableIndex& index,
                                      const std::vector<AgentSubproblem>& subs,
                                      const Residuals& res, const Scalings& scalings);

// Relative residual of a direction substituted into the full linearized
// KKT system (the module's self-check).
double direction_residual(const IterateState& state, const GlobalVariableIndex& index,
                          const std::vector<AgentSubproblem>& subs, const Residuals& res,
                          const Scalings& scalings, const SearchDirection& dir);

// Norms of (r_p, r_p_lin, r_d, r_d_lin) at a point; independent of delta.
std::array<double, 4> feasibility_norms(const IterateState& state,
                                        const GlobalVariableIndex& index,
                                        const std::vector<AgentSubproblem>& subs);

double rhs_norm(const std::vector<AgentSubproblem>& subs);  // ||(b, b_bar)||

// Assembly helpers shared with the message-passing solver.
Eigen::VectorXd gather(const Eigen::VectorXd& y, const std::vector<int>& J);
void scatter_add(Eigen::VectorXd& y, const std::vector<int>& J,
                 const Eigen::VectorXd& local);
// Per-block Hx = F^{-1} U = skron(W_scal^{-1}, W_scal^{-1}) for one agent.
std::vector<Eigen::MatrixXd> hx_blocks(const std::vector<ScalingPoint>& scal);
// Hy^k = D^T diag(lambda / (g - D y)) D over the agent's local coordinates.
Eigen::MatrixXd hy_local(const AgentSubproblem& sp, const Eigen::VectorXd& y_J,
                         const Eigen::VectorXd& lambda);
// r_lin^k = r_d,lin^k - D^T E^{-1} r_c,lin^k with E = diag(D y - g).
Eigen::VectorXd r_lin_local(const AgentSubproblem& sp, const Eigen::VectorXd& y_J,
                            const Eigen::VectorXd& r_d_lin_k,
                            const Eigen::VectorXd& r_c_lin_k);

using DirectionFn = std::function<SearchDirection(
    const IterateState&, const Residuals&, const Scalings&, int iter)>;
using IterationObserver = std::function<void(int iter)>;

SolveResult run_pdipm(const GlobalVariableIndex& index,
                      const std::vector<AgentSubproblem>& subs,
                      const Eigen::VectorXd& y0, const SolverOptions& opts,
                      const DirectionFn& direction, const IterationObserver& observer = {});

SolveResult solve_centralized(const GlobalVariableIndex& index,
                              const std::vector<AgentSubproblem>& subs,
                              const Eigen::VectorXd& y0, const SolverOptions& opts);

// Internal objective equilibration: the solver iterates on cost c/s with
// s = max(1, max_k ||c^k||_inf) and maps the dual variables back by s on
// exit. This is an exact reformulation (identical primal solution); it
// keeps the identity-initialized iterate well-centered when measurement
// variances are small.
double cost_normalization(const std::vector<AgentSubproblem>& subs);
std::vector<AgentSubproblem> scale_costs(const std::vector<AgentSubproblem>& subs,
                                         double factor);
// Multiplies duals (v, v_bar, lambda, Z) by s and recomputes objective,
// mu_final and feas_final against the original subproblems.
void unscale_result(SolveResult& result, const GlobalVariableIndex& index,
                    const std::vector<AgentSubproblem>& original_subs, double s);

// Strictly-feasible starting y for a localization instance:
// D_ij = max(R_ij, 0.1), Z_ij = max(Y_ij, 0.1), all else zero.
Eigen::VectorXd initial_y(const GlobalVariableIndex& index, const NetworkScenario& scn);

}  // namespace treeloc
