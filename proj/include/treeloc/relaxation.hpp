#pragma once

#include <Eigen/Dense>
#include <map>
#include <utility>
#include <vector>

#include "treeloc/graph.hpp"
#include "treeloc/scenario.hpp"

// Lowers a scenario plus clique tree into the standard coupled-SDP form:
// per agent k,
//   Q^k x^k + W^k y_{J_k} = b^k    (matrix-block definitions)
//   A^k y_{J_k} = bbar^k           (Lambda / Xi linear relations)
//   D^k y_{J_k} <= g^k             (-D_ij <= 0, -Z_ij <= 0)
//   X^k >= 0                       (one T block, b_k Gamma blocks, a_k Phi blocks)
// with cost (c^k)^T y_{J_k} + offset_k.

namespace treeloc {

struct Assignment {
  std::vector<std::vector<int>> phi;      // per agent: indices into range_measurements
  std::vector<std::vector<int>> phi_bar;  // per agent: sensor ids owning anchor sets
  std::vector<int> range_agent;           // per range measurement: owning agent
  std::vector<int> anchor_agent;          // per anchor measurement: owning agent
};

struct GlobalVariableIndex {
  int dim = 2;
  int n_sensors = 0;
  int n_y = 0;
  std::map<std::pair<int, int>, int> s_entry;  // (i<=j) in chordal pattern -> y index
  std::vector<int> lambda_idx, dcap_idx;       // per range measurement
  std::vector<int> xi_idx, zslack_idx;         // per anchor measurement
  std::vector<std::vector<int>> J;             // per agent, sorted y indices

  int x_idx(int sensor, int coord) const { return sensor * dim + coord; }
};

struct AgentSubproblem {
  int agent = 0;
  std::vector<int> clique;        // sensor ids, sorted
  std::vector<int> block_orders;  // T first, then Gamma blocks, then Phi blocks
  std::vector<int> range_meas;    // measurement indices handled here
  std::vector<int> anchor_meas;

  // columns of W, A, D follow the J_k ordering of GlobalVariableIndex
  Eigen::MatrixXd Q;   // n_x x n_x (identity by construction)
  Eigen::MatrixXd W;   // n_x x |J_k|
  Eigen::VectorXd b;
  Eigen::MatrixXd A;   // (b_k + a_k) x |J_k|
  Eigen::VectorXd b_bar;
  Eigen::MatrixXd D;   // inequality rows over J_k
  Eigen::VectorXd g;
  Eigen::VectorXd c;   // cost slice over J_k
  double offset = 0.0;      // sum R^2/var + Y^2/var terms
  double reg_offset = 0.0;  // constant part of trace regularization

  int n_x() const;  // total svec length over blocks
  int n_vars() const;        // |J_k| + n_x, the paper's n_k
  int n_equalities() const;  // rows(Q) + rows(A), the paper's e_k
};

// First-eligible-clique assignment: agents ascending, then i in C_k
// ascending, then neighbors ascending.
Assignment assign_measurements(const CliqueTree& tree, const NetworkScenario& scn);

std::pair<GlobalVariableIndex, std::vector<AgentSubproblem>> build_subproblems(
    const CliqueTree& tree, const Assignment& assignment, const NetworkScenario& scn);

// alpha * trace(T^k) + rho * trace(Gamma) + mu * trace(Phi) added to each
// agent's cost. Zero weights are a no-op; negative weights are an error.
void add_trace_regularization(const GlobalVariableIndex& index,
                              std::vector<AgentSubproblem>& subproblems, double alpha,
                              double rho, double mu);

Eigen::MatrixXd extract_positions(const GlobalVariableIndex& index,
                                  const Eigen::VectorXd& y);

// Objective sum_k (c^k)^T y_{J_k} + offset_k at a given global point.
double evaluate_objective(const GlobalVariableIndex& index,
                          const std::vector<AgentSubproblem>& subproblems,
                          const Eigen::VectorXd& y);

// Debug dump of block sizes, row counts and index sets.
std::string subproblems_to_json(const GlobalVariableIndex& index,
                                const std::vector<AgentSubproblem>& subproblems,
                                const CliqueTree& tree);

}  // namespace treeloc
