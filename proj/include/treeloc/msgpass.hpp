#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treeloc/graph.hpp"
#include "treeloc/pdipm.hpp"

// Distributed computation of every interior-point stage over the clique
// tree: per-agent QP partition, upward quadratic-message elimination, root
// solve with downward propagation, tree reductions for step sizes and
// termination, and exact communication accounting.

namespace treeloc {

struct AgentNode {
  int id = 0;
  int parent = -1;
  std::vector<int> children;
  // Local coordinate order is [dy_{J_k} in J_k order | dx^k].
  std::vector<int> sep_global;  // y indices shared with the parent, ascending
  std::vector<int> sep_local;   // their positions in the local order
  std::vector<int> res_local;   // complementary positions
  int s_k = 0;  // separator size, 2|U_k| + |U_k|(|U_k|+1)/2
  int r_k = 0;  // residual count, n_k - s_k
  int e_k = 0;  // equality rows; the upward factorization has order r_k + e_k
  int n_k = 0;  // |J_k| + n_x
};

// Quadratic value function (1/2) s^T H s + h^T s over separator
// coordinates; the unit of inter-agent communication.
struct QuadraticMessage {
  Eigen::MatrixXd H;
  Eigen::VectorXd h;
  // Wire size: upper triangle of H plus h.
  int payload_scalars() const {
    int s = static_cast<int>(h.size());
    return s * (s + 1) / 2 + s;
  }
};

// Local equality-constrained QP of one agent for the current iteration:
//   minimize (1/2) z^T H z - g^T z  subject to  C z = d
// over z = [dy_{J_k} | dx^k].
struct LocalQP {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd C;  // [W I; A 0]
  Eigen::VectorXd d;  // [r_p; r_p_lin]
};

// One accounting row: an agent's traffic on its parent edge during one
// pass (up = what it sends, down = what it receives back). Each agent
// takes part in exactly one upward and one downward exchange per pass,
// so msgs is always 2 and per-agent totals are 6 per iteration.
struct CommRecord {
  int iter = 0;
  int pass = 0;  // 1 direction, 2 step sizes, 3 perturbation+termination
  int agent = 0;
  long msgs = 2;
  long scalars_up = 0;
  long scalars_down = 0;
};

struct CommLog {
  std::vector<CommRecord> records;
  int n_agents = 0;
  int tree_height = 0;
  int iterations = 0;

  std::vector<long> per_agent_comms() const;    // messages; 6p when complete
  std::vector<long> per_agent_scalars() const;  // up + down payload totals
  std::string to_csv() const;  // iter,pass,agent,msgs,scalars_up,scalars_down
};

// Separator/residual index sets for every agent. Throws on an index
// inconsistency between the clique tree and the variable index.
std::vector<AgentNode> build_agent_tree(const CliqueTree& tree,
                                        const GlobalVariableIndex& index,
                                        const std::vector<AgentSubproblem>& subs);

// The agent's share of the global reduced QP: summing all agents'
// (H, g) over shared coordinates reproduces the centralized system.
LocalQP local_qp_blocks(const AgentNode& node, const AgentSubproblem& sp,
                        const IterateState& state, const GlobalVariableIndex& index,
                        const Residuals& res,
                        const std::vector<ScalingPoint>& scal);

// Adds a child's message into qp at the given local coordinate positions.
void fold_message(LocalQP& qp, const QuadraticMessage& msg,
                  const std::vector<int>& positions);

// Exact partial minimization of qp (child messages already folded) over
// the residual coordinates; one symmetric-indefinite factorization of
// order r_k + e_k. Throws "agent k KKT singular" when that matrix is
// singular (redundant local constraint or lost interiority).
QuadraticMessage upward_message(const AgentNode& node, const LocalQP& qp);

// One direction computation by message passing; reusable across
// iterations. Construct once per (tree, subproblems) pair.
class DistributedDirectionSolver {
 public:
  DistributedDirectionSolver(const CliqueTree& tree, const GlobalVariableIndex& index,
                             const std::vector<AgentSubproblem>& subs);
  ~DistributedDirectionSolver();

  // Upward pass, root solve, downward pass, dual recovery.
  SearchDirection compute(const IterateState& state, const Residuals& res,
                          const Scalings& scalings) const;

  const std::vector<AgentNode>& nodes() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Tree reductions following the direction pass: fraction-to-boundary step
// sizes (min-reduction), duality measure and perturbation update
// (sum-reduction), feasibility norms and the stop decision. Contributions
// are folded in ascending agent order, so the outcome is bitwise equal to
// the centralized loop's.
struct TreeReduceResult {
  double t_p = 0, t_d = 0;
  double mu = 0, delta = 0;
  std::array<double, 4> feas_norms{};  // (r_p, r_p_lin, r_d, r_d_lin)
  bool stop = false;
};

TreeReduceResult tree_reduce_step_and_delta(const GlobalVariableIndex& index,
                                            const std::vector<AgentSubproblem>& subs,
                                            const IterateState& state,
                                            const SearchDirection& dir,
                                            const SolverOptions& opts, double bnorm);

struct DistributedResult {
  SolveResult result;
  CommLog log;
};

// Full distributed solve: identical iterates to solve_centralized (same
// loop, message-passing directions) plus the communication log with three
// upward-downward passes per iteration.
DistributedResult solve_distributed(const CliqueTree& tree,
                                    const GlobalVariableIndex& index,
                                    const std::vector<AgentSubproblem>& subs,
                                    const Eigen::VectorXd& y0,
                                    const SolverOptions& opts);

}  // namespace treeloc
