#include "treeloc/relaxation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "treeloc/sdplinalg.hpp"

namespace treeloc {

namespace {
const double kSqrt2 = std::sqrt(2.0);
}

int AgentSubproblem::n_x() const {
  int n = 0;
  for (int o : block_orders) n += svec_size(o);
  return n;
}

int AgentSubproblem::n_vars() const {
  return static_cast<int>(W.cols()) + n_x();
}

int AgentSubproblem::n_equalities() const {
  return static_cast<int>(Q.rows() + A.rows());
}

Assignment assign_measurements(const CliqueTree& tree, const NetworkScenario& scn) {
  const int q = tree.size();
  Assignment asg;
  asg.phi.assign(q, {});
  asg.phi_bar.assign(q, {});
  asg.range_agent.assign(scn.range_measurements.size(), -1);
  asg.anchor_agent.assign(scn.anchor_measurements.size(), -1);

  std::map<std::pair<int, int>, int> edge_to_meas;
  for (size_t m = 0; m < scn.range_measurements.size(); ++m)
    edge_to_meas[{scn.range_measurements[m].i, scn.range_measurements[m].j}] =
        static_cast<int>(m);
  std::vector<std::vector<int>> anchor_meas_of(scn.n_sensors);
  for (size_t m = 0; m < scn.anchor_measurements.size(); ++m)
    anchor_meas_of[scn.anchor_measurements[m].i].push_back(static_cast<int>(m));
  Graph g = scn.measurement_graph();
  std::vector<char> sensor_anchor_assigned(scn.n_sensors, 0);

  for (int k = 0; k < q; ++k) {
    std::vector<char> in_clique(scn.n_sensors, 0);
    for (int v : tree.cliques[k].members) in_clique[v] = 1;
    for (int i : tree.cliques[k].members) {
      for (int j : g.neighbors(i)) {
        if (j <= i || !in_clique[j]) continue;
        int m = edge_to_meas.at({i, j});
        if (asg.range_agent[m] < 0) {
          asg.range_agent[m] = k;
          asg.phi[k].push_back(m);
        }
      }
      if (!sensor_anchor_assigned[i] && !anchor_meas_of[i].empty()) {
        sensor_anchor_assigned[i] = 1;
        asg.phi_bar[k].push_back(i);
        for (int m : anchor_meas_of[i]) asg.anchor_agent[m] = k;
      }
    }
  }
  for (int a : asg.range_agent)
    if (a < 0)
      throw std::runtime_error(
          "assign_measurements: measurement edge not covered by any clique");
  for (int a : asg.anchor_agent)
    if (a < 0)
      throw std::runtime_error(
          "assign_measurements: anchor measurement sensor not in any clique");
  return asg;
}

std::pair<GlobalVariableIndex, std::vector<AgentSubproblem>> build_subproblems(
    const CliqueTree& tree, const Assignment& assignment, const NetworkScenario& scn) {
  const int q = tree.size();
  const int d = scn.dim;
  GlobalVariableIndex idx;
  idx.dim = d;
  idx.n_sensors = scn.n_sensors;

  int next = scn.n_sensors * d;  // x_s block occupies [0, N*d)
  for (int k = 0; k < q; ++k) {
    const auto& C = tree.cliques[k].members;
    for (size_t a = 0; a < C.size(); ++a)
      for (size_t b = a; b < C.size(); ++b)
        idx.s_entry.emplace(std::make_pair(C[a], C[b]), -1);
  }
  for (auto& [key, v] : idx.s_entry) v = next++;
  idx.lambda_idx.resize(scn.range_measurements.size());
  idx.dcap_idx.resize(scn.range_measurements.size());
  for (size_t m = 0; m < scn.range_measurements.size(); ++m) {
    idx.lambda_idx[m] = next++;
    idx.dcap_idx[m] = next++;
  }
  idx.xi_idx.resize(scn.anchor_measurements.size());
  idx.zslack_idx.resize(scn.anchor_measurements.size());
  for (size_t m = 0; m < scn.anchor_measurements.size(); ++m) {
    idx.xi_idx[m] = next++;
    idx.zslack_idx[m] = next++;
  }
  idx.n_y = next;

  idx.J.assign(q, {});
  std::vector<AgentSubproblem> subs(q);
  for (int k = 0; k < q; ++k) {
    AgentSubproblem& sp = subs[k];
    sp.agent = k;
    sp.clique = tree.cliques[k].members;
    sp.range_meas = assignment.phi[k];
    for (size_t m = 0; m < scn.anchor_measurements.size(); ++m)
      if (assignment.anchor_agent[m] == k) sp.anchor_meas.push_back(static_cast<int>(m));

    std::vector<int> Jk;
    for (int i : sp.clique)
      for (int t = 0; t < d; ++t) Jk.push_back(idx.x_idx(i, t));
    for (size_t a = 0; a < sp.clique.size(); ++a)
      for (size_t b = a; b < sp.clique.size(); ++b)
        Jk.push_back(idx.s_entry.at({sp.clique[a], sp.clique[b]}));
    for (int m : sp.range_meas) {
      Jk.push_back(idx.lambda_idx[m]);
      Jk.push_back(idx.dcap_idx[m]);
    }
    for (int m : sp.anchor_meas) {
      Jk.push_back(idx.xi_idx[m]);
      Jk.push_back(idx.zslack_idx[m]);
    }
    std::sort(Jk.begin(), Jk.end());
    idx.J[k] = Jk;
    std::map<int, int> loc;
    for (size_t p = 0; p < Jk.size(); ++p) loc[Jk[p]] = static_cast<int>(p);

    const int nc = static_cast<int>(sp.clique.size());
    const int nt = d + nc;
    const int bk = static_cast<int>(sp.range_meas.size());
    const int ak = static_cast<int>(sp.anchor_meas.size());
    sp.block_orders.push_back(nt);
    for (int m = 0; m < bk + ak; ++m) sp.block_orders.push_back(2);

    const int nx = sp.n_x();
    const int njk = static_cast<int>(Jk.size());
    sp.Q = Eigen::MatrixXd::Identity(nx, nx);
    sp.W = Eigen::MatrixXd::Zero(nx, njk);
    sp.b = Eigen::VectorXd::Zero(nx);
    sp.A = Eigen::MatrixXd::Zero(bk + ak, njk);
    sp.b_bar = Eigen::VectorXd::Zero(bk + ak);
    sp.D = Eigen::MatrixXd::Zero(bk + ak, njk);
    sp.g = Eigen::VectorXd::Zero(bk + ak);
    sp.c = Eigen::VectorXd::Zero(njk);

    // T block: [[I_d, X E^T], [E X^T, S_CC]] in svec row order
    int row = 0;
    for (int col = 0; col < nt; ++col)
      for (int r = col; r < nt; ++r, ++row) {
        if (r < d && col < d) {
          sp.b[row] = (r == col) ? 1.0 : 0.0;
        } else if (r >= d && col < d) {
          sp.W(row, loc.at(idx.x_idx(sp.clique[r - d], col))) = -kSqrt2;
        } else {
          int i = sp.clique[r - d], j = sp.clique[col - d];
          int si = idx.s_entry.at({std::min(i, j), std::max(i, j)});
          sp.W(row, loc.at(si)) = (r == col) ? -1.0 : -kSqrt2;
        }
      }
    // Gamma blocks: [[1, D_ij], [D_ij, Lambda_ij]]
    for (int m : sp.range_meas) {
      sp.b[row] = 1.0;
      ++row;  // (0,0)
      sp.W(row++, loc.at(idx.dcap_idx[m])) = -kSqrt2;  // (1,0)
      sp.W(row++, loc.at(idx.lambda_idx[m])) = -1.0;   // (1,1)
    }
    // Phi blocks: [[1, Z_ij], [Z_ij, Xi_ij]]
    for (int m : sp.anchor_meas) {
      sp.b[row] = 1.0;
      ++row;
      sp.W(row++, loc.at(idx.zslack_idx[m])) = -kSqrt2;
      sp.W(row++, loc.at(idx.xi_idx[m])) = -1.0;
    }

    // linear equalities and inequalities
    int lrow = 0;
    for (int m : sp.range_meas) {
      const auto& meas = scn.range_measurements[m];
      sp.A(lrow, loc.at(idx.s_entry.at({meas.i, meas.i}))) += 1.0;
      sp.A(lrow, loc.at(idx.s_entry.at({meas.j, meas.j}))) += 1.0;
      sp.A(lrow, loc.at(idx.s_entry.at({meas.i, meas.j}))) += -2.0;
      sp.A(lrow, loc.at(idx.lambda_idx[m])) = -1.0;
      sp.D(lrow, loc.at(idx.dcap_idx[m])) = -1.0;
      sp.c[loc.at(idx.lambda_idx[m])] += 1.0 / meas.variance;
      sp.c[loc.at(idx.dcap_idx[m])] += -2.0 * meas.value / meas.variance;
      sp.offset += meas.value * meas.value / meas.variance;
      ++lrow;
    }
    for (int m : sp.anchor_meas) {
      const auto& meas = scn.anchor_measurements[m];
      Eigen::VectorXd anchor = scn.anchors.row(meas.j);
      sp.A(lrow, loc.at(idx.s_entry.at({meas.i, meas.i}))) += 1.0;
      for (int t = 0; t < d; ++t)
        sp.A(lrow, loc.at(idx.x_idx(meas.i, t))) = -2.0 * anchor[t];
      sp.A(lrow, loc.at(idx.xi_idx[m])) = -1.0;
      sp.b_bar[lrow] = -anchor.squaredNorm();
      sp.D(lrow, loc.at(idx.zslack_idx[m])) = -1.0;
      sp.c[loc.at(idx.xi_idx[m])] += 1.0 / meas.variance;
      sp.c[loc.at(idx.zslack_idx[m])] += -2.0 * meas.value / meas.variance;
      sp.offset += meas.value * meas.value / meas.variance;
      ++lrow;
    }
  }
  return {std::move(idx), std::move(subs)};
}

void add_trace_regularization(const GlobalVariableIndex& index,
                              std::vector<AgentSubproblem>& subproblems, double alpha,
                              double rho, double mu) {
  if (alpha < 0 || rho < 0 || mu < 0)
    throw std::invalid_argument("add_trace_regularization: negative weight");
  if (alpha == 0 && rho == 0 && mu == 0) return;
  for (auto& sp : subproblems) {
    std::map<int, int> loc;
    // rebuild local index map
    {
      int p = 0;
      for (int gidx : index.J[sp.agent]) loc[gidx] = p++;
    }
    if (alpha > 0) {
      for (int i : sp.clique) sp.c[loc.at(index.s_entry.at({i, i}))] += alpha;
      sp.reg_offset += alpha * index.dim;
    }
    for (int m : sp.range_meas) {
      sp.c[loc.at(index.lambda_idx[m])] += rho;
      sp.reg_offset += rho;
    }
    for (int m : sp.anchor_meas) {
      sp.c[loc.at(index.xi_idx[m])] += mu;
      sp.reg_offset += mu;
    }
  }
}

Eigen::MatrixXd extract_positions(const GlobalVariableIndex& index,
                                  const Eigen::VectorXd& y) {
  if (y.size() != index.n_y)
    throw std::invalid_argument("extract_positions: dimension mismatch");
  Eigen::MatrixXd p(index.n_sensors, index.dim);
  for (int i = 0; i < index.n_sensors; ++i)
    for (int t = 0; t < index.dim; ++t) p(i, t) = y[index.x_idx(i, t)];
  return p;
}

double evaluate_objective(const GlobalVariableIndex& index,
                          const std::vector<AgentSubproblem>& subproblems,
                          const Eigen::VectorXd& y) {
  double obj = 0.0;
  for (const auto& sp : subproblems) {
    const auto& Jk = index.J[sp.agent];
    for (size_t p = 0; p < Jk.size(); ++p) obj += sp.c[p] * y[Jk[p]];
    obj += sp.offset + sp.reg_offset;
  }
  return obj;
}

std::string subproblems_to_json(const GlobalVariableIndex& index,
                                const std::vector<AgentSubproblem>& subproblems,
                                const CliqueTree& tree) {
  nlohmann::ordered_json j;
  j["n_y"] = index.n_y;
  j["n_sensors"] = index.n_sensors;
  j["dim"] = index.dim;
  j["agents"] = nlohmann::ordered_json::array();
  for (const auto& sp : subproblems) {
    nlohmann::ordered_json a;
    a["agent"] = sp.agent;
    a["clique"] = sp.clique;
    a["block_orders"] = sp.block_orders;
    a["n_vars"] = sp.n_vars();
    a["n_equalities"] = sp.n_equalities();
    a["n_inequalities"] = static_cast<int>(sp.D.rows());
    a["J"] = index.J[sp.agent];
    a["separator"] = tree.separators[sp.agent];
    j["agents"].push_back(a);
  }
  return j.dump(2) + "\n";
}

}  // namespace treeloc
