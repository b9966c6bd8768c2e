#include "treeloc/msgpass.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace treeloc {

namespace {

// Position of value `v` in the sorted vector `sorted`; -1 when absent.
int sorted_position(const std::vector<int>& sorted, int v) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
  if (it == sorted.end() || *it != v) return -1;
  return static_cast<int>(it - sorted.begin());
}

// Partial minimization of `qp` over the coordinates in res_idx (with
// the local equality multipliers), parameterized by the sep_idx
// coordinates. On return `w` solves the unparameterized KKT system, `Y`
// maps separator values into the solution, and `msg` is the quadratic
// value function. For an empty separator `w` is the full local solution.
void eliminate_residuals(const LocalQP& qp, const std::vector<int>& res_idx,
                         const std::vector<int>& sep_idx, int agent_id,
                         Eigen::MatrixXd& Y, Eigen::VectorXd& w,
                         QuadraticMessage& msg) {
  const int r = static_cast<int>(res_idx.size());
  const int e = static_cast<int>(qp.C.rows());
  const int s = static_cast<int>(sep_idx.size());

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(r + e, r + e);
  K.topLeftCorner(r, r) = qp.H(res_idx, res_idx);
  K.topRightCorner(r, e) = qp.C(Eigen::all, res_idx).transpose();
  K.bottomLeftCorner(e, r) = qp.C(Eigen::all, res_idx);

  RefinedSymIndefSolver solver(K);
  if (solver.singular())
    throw std::runtime_error(
        "agent " + std::to_string(agent_id) +
        " KKT singular; check for duplicate measurements or lost interiority");

  Eigen::VectorXd rhs0(r + e);
  rhs0.head(r) = qp.g(res_idx);
  rhs0.tail(e) = qp.d;
  w = solver.solve(rhs0);

  if (s == 0) {
    Y.resize(r + e, 0);
    msg.H.resize(0, 0);
    msg.h.resize(0);
    return;
  }
  Eigen::MatrixXd B(r + e, s);
  B.topRows(r) = qp.H(res_idx, sep_idx);
  B.bottomRows(e) = qp.C(Eigen::all, sep_idx);
  Y = solver.solve(B);
  Eigen::MatrixXd Hm = qp.H(sep_idx, sep_idx) - B.transpose() * Y;
  msg.H = 0.5 * (Hm + Hm.transpose());
  msg.h = -qp.g(sep_idx) + B.transpose() * w;
}

}  // namespace

std::vector<long> CommLog::per_agent_comms() const {
  std::vector<long> out(n_agents, 0);
  for (const auto& r : records) out[r.agent] += r.msgs;
  return out;
}

std::vector<long> CommLog::per_agent_scalars() const {
  std::vector<long> out(n_agents, 0);
  for (const auto& r : records) out[r.agent] += r.scalars_up + r.scalars_down;
  return out;
}

std::string CommLog::to_csv() const {
  std::ostringstream os;
  os << "iter,pass,agent,msgs,scalars_up,scalars_down\n";
  long tm = 0, tu = 0, td = 0;
  for (const auto& r : records) {
    os << r.iter << ',' << r.pass << ',' << r.agent << ',' << r.msgs << ','
       << r.scalars_up << ',' << r.scalars_down << '\n';
    tm += r.msgs;
    tu += r.scalars_up;
    td += r.scalars_down;
  }
  os << "summary,,," << tm << ',' << tu << ',' << td << '\n';
  return os.str();
}

std::vector<AgentNode> build_agent_tree(const CliqueTree& tree,
                                        const GlobalVariableIndex& index,
                                        const std::vector<AgentSubproblem>& subs) {
  const int q = tree.size();
  if (static_cast<int>(subs.size()) != q ||
      static_cast<int>(index.J.size()) != q)
    throw std::invalid_argument("build_agent_tree: one subproblem per clique required");
  std::vector<AgentNode> nodes(q);
  for (int k = 0; k < q; ++k) {
    AgentNode& nd = nodes[k];
    nd.id = k;
    nd.parent = tree.parent[k];
    nd.children = tree.children[k];
    const auto& J = index.J[k];
    const int nj = static_cast<int>(J.size());
    const int nx = subs[k].n_x();
    nd.n_k = nj + nx;
    nd.e_k = subs[k].n_equalities();
    if (nd.parent >= 0) {
      std::set_intersection(J.begin(), J.end(), index.J[nd.parent].begin(),
                            index.J[nd.parent].end(),
                            std::back_inserter(nd.sep_global));
      const int u = static_cast<int>(tree.separators[k].size());
      if (static_cast<int>(nd.sep_global.size()) !=
          index.dim * u + u * (u + 1) / 2)
        throw std::invalid_argument(
            "build_agent_tree: shared coordinates of agent " + std::to_string(k) +
            " do not match its clique separator");
    }
    for (int id : nd.sep_global) nd.sep_local.push_back(sorted_position(J, id));
    std::vector<bool> is_sep(nd.n_k, false);
    for (int p : nd.sep_local) is_sep[p] = true;
    for (int p = 0; p < nd.n_k; ++p)
      if (!is_sep[p]) nd.res_local.push_back(p);
    nd.s_k = static_cast<int>(nd.sep_local.size());
    nd.r_k = nd.n_k - nd.s_k;
  }
  return nodes;
}

LocalQP local_qp_blocks(const AgentNode& node, const AgentSubproblem& sp,
                        const IterateState& state, const GlobalVariableIndex& index,
                        const Residuals& res,
                        const std::vector<ScalingPoint>& scal) {
  const int k = node.id;
  const auto& J = index.J[k];
  const int nj = static_cast<int>(J.size());
  const int nx = sp.n_x();
  const int nl = static_cast<int>(sp.A.rows());
  Eigen::VectorXd y_J = gather(state.y, J);

  LocalQP qp;
  qp.H = Eigen::MatrixXd::Zero(node.n_k, node.n_k);
  qp.H.topLeftCorner(nj, nj) = hy_local(sp, y_J, state.lambda[k]);
  std::vector<Eigen::MatrixXd> hx = hx_blocks(scal);
  Eigen::VectorXd r = res.r_d[k];
  int bat = 0;
  for (size_t j = 0; j < scal.size(); ++j) {
    const int m = svec_size(sp.block_orders[j]);
    qp.H.block(nj + bat, nj + bat, m, m) = hx[j];
    r.segment(bat, m) +=
        scal[j].F_op.partialPivLu().solve(res.r_c[k].segment(bat, m));
    bat += m;
  }
  qp.g.resize(node.n_k);
  qp.g.head(nj) = r_lin_local(sp, y_J, res.r_d_lin_k[k], res.r_c_lin[k]);
  qp.g.tail(nx) = r;
  qp.C = Eigen::MatrixXd::Zero(nx + nl, node.n_k);
  qp.C.topLeftCorner(nx, nj) = sp.W;
  qp.C.block(0, nj, nx, nx) = sp.Q;
  qp.C.bottomLeftCorner(nl, nj) = sp.A;
  qp.d.resize(nx + nl);
  qp.d.head(nx) = res.r_p[k];
  qp.d.tail(nl) = res.r_p_lin[k];
  return qp;
}

void fold_message(LocalQP& qp, const QuadraticMessage& msg,
                  const std::vector<int>& positions) {
  const int s = static_cast<int>(positions.size());
  if (msg.H.rows() != s || msg.h.size() != s)
    throw std::invalid_argument("fold_message: dimension mismatch");
  for (int a = 0; a < s; ++a) {
    qp.g[positions[a]] -= msg.h[a];
    for (int b = 0; b < s; ++b) qp.H(positions[a], positions[b]) += msg.H(a, b);
  }
}

QuadraticMessage upward_message(const AgentNode& node, const LocalQP& qp) {
  Eigen::MatrixXd Y;
  Eigen::VectorXd w;
  QuadraticMessage msg;
  eliminate_residuals(qp, node.res_local, node.sep_local, node.id, Y, w, msg);
  return msg;
}

struct DistributedDirectionSolver::Impl {
  GlobalVariableIndex index;
  std::vector<AgentSubproblem> subs;
  std::vector<AgentNode> nodes;
  std::vector<int> postorder;
  // Per node: position of each separator coordinate inside the parent's
  // local ordering (empty at the root).
  std::vector<std::vector<int>> sep_pos_in_parent;
};

DistributedDirectionSolver::DistributedDirectionSolver(
    const CliqueTree& tree, const GlobalVariableIndex& index,
    const std::vector<AgentSubproblem>& subs)
    : impl_(std::make_unique<Impl>()) {
  impl_->index = index;
  impl_->subs = subs;
  impl_->nodes = build_agent_tree(tree, index, subs);
  impl_->postorder = tree.postorder();
  impl_->sep_pos_in_parent.resize(tree.size());
  for (const AgentNode& nd : impl_->nodes) {
    if (nd.parent < 0) continue;
    for (int id : nd.sep_global) {
      int pos = sorted_position(index.J[nd.parent], id);
      if (pos < 0)
        throw std::invalid_argument(
            "build_agent_tree: separator coordinate missing from parent agent " +
            std::to_string(nd.parent));
      impl_->sep_pos_in_parent[nd.id].push_back(pos);
    }
  }
}

DistributedDirectionSolver::~DistributedDirectionSolver() = default;

const std::vector<AgentNode>& DistributedDirectionSolver::nodes() const {
  return impl_->nodes;
}

SearchDirection DistributedDirectionSolver::compute(const IterateState& state,
                                                    const Residuals& res,
                                                    const Scalings& scalings) const {
  const Impl& im = *impl_;
  const int q = static_cast<int>(im.subs.size());
  std::vector<LocalQP> qps(q);
  for (int k = 0; k < q; ++k)
    qps[k] = local_qp_blocks(im.nodes[k], im.subs[k], state, im.index, res,
                             scalings[k]);

  // upward pass: leaves first; each agent folds its children's messages,
  // eliminates its residual coordinates and sends a quadratic up
  std::vector<QuadraticMessage> msgs(q);
  std::vector<Eigen::MatrixXd> Y(q);
  std::vector<Eigen::VectorXd> w(q);
  for (int k : im.postorder) {
    for (int child : im.nodes[k].children)
      fold_message(qps[k], msgs[child], im.sep_pos_in_parent[child]);
    eliminate_residuals(qps[k], im.nodes[k].res_local, im.nodes[k].sep_local, k,
                        Y[k], w[k], msgs[k]);
  }

  // downward pass: the root's solve is complete; every other agent fixes
  // its separator coordinates to the parent's values and back-substitutes
  std::vector<Eigen::VectorXd> z(q), nu(q);
  for (auto it = im.postorder.rbegin(); it != im.postorder.rend(); ++it) {
    const int k = *it;
    const AgentNode& nd = im.nodes[k];
    Eigen::VectorXd sol;
    z[k].resize(nd.n_k);
    if (nd.parent < 0) {
      sol = w[k];
    } else {
      Eigen::VectorXd zs(nd.s_k);
      for (int a = 0; a < nd.s_k; ++a)
        zs[a] = z[nd.parent][im.sep_pos_in_parent[k][a]];
      sol = w[k] - Y[k] * zs;
      for (int a = 0; a < nd.s_k; ++a) z[k][nd.sep_local[a]] = zs[a];
    }
    for (int a = 0; a < nd.r_k; ++a) z[k][nd.res_local[a]] = sol[a];
    nu[k] = sol.tail(nd.e_k);
  }

  SearchDirection dir;
  dir.dy = Eigen::VectorXd::Zero(im.index.n_y);
  dir.dx.resize(q);
  dir.dz.resize(q);
  dir.dv.resize(q);
  dir.dv_bar.resize(q);
  dir.dlambda.resize(q);
  for (int k = 0; k < q; ++k) {
    const AgentSubproblem& sp = im.subs[k];
    const auto& J = im.index.J[k];
    const int nj = static_cast<int>(J.size());
    const int nx = sp.n_x();
    for (int p = 0; p < nj; ++p) dir.dy[J[p]] = z[k][p];
    dir.dx[k] = z[k].tail(nx);
    dir.dv[k] = nu[k].head(nx);
    dir.dv_bar[k] = nu[k].tail(sp.A.rows());
    dir.dz[k] = sp.Q.transpose() * dir.dv[k] - res.r_d[k];
    if (sp.D.rows() > 0) {
      Eigen::VectorXd y_J = gather(state.y, J);
      Eigen::VectorXd e = sp.D * y_J - sp.g;
      Eigen::VectorXd dDy = sp.D * gather(dir.dy, J);
      dir.dlambda[k] =
          ((res.r_c_lin[k].array() - state.lambda[k].array() * dDy.array()) /
           e.array())
              .matrix();
    } else {
      dir.dlambda[k] = Eigen::VectorXd::Zero(0);
    }
  }
  return dir;
}

TreeReduceResult tree_reduce_step_and_delta(const GlobalVariableIndex& index,
                                            const std::vector<AgentSubproblem>& subs,
                                            const IterateState& state,
                                            const SearchDirection& dir,
                                            const SolverOptions& opts, double bnorm) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  TreeReduceResult out;
  // min-reduction of per-agent boundary bounds, ascending agent order
  double bp = kInf, bd = kInf;
  for (size_t k = 0; k < subs.size(); ++k) {
    auto [p, d] = agent_step_bounds(state, index, subs, dir, static_cast<int>(k));
    bp = std::min(bp, p);
    bd = std::min(bd, d);
  }
  out.t_p = std::min(1.0, opts.gamma * bp);
  out.t_d = std::min(1.0, opts.gamma * bd);
  // sum-reductions at the stepped iterate, identical to the solver loop
  IterateState stepped = state;
  apply_step(stepped, subs, dir, out.t_p, out.t_d);
  out.mu = duality_measure(stepped, index, subs);
  out.delta = opts.sigma_c * out.mu;
  out.feas_norms = feasibility_norms(stepped, index, subs);
  double feas = *std::max_element(out.feas_norms.begin(), out.feas_norms.end()) /
                (1.0 + bnorm);
  out.stop = feas <= opts.eps_feas && out.mu <= opts.eps_gap;
  return out;
}

DistributedResult solve_distributed(const CliqueTree& tree,
                                    const GlobalVariableIndex& index,
                                    const std::vector<AgentSubproblem>& subs,
                                    const Eigen::VectorXd& y0,
                                    const SolverOptions& opts) {
  const double s = cost_normalization(subs);
  const std::vector<AgentSubproblem> scaled = scale_costs(subs, 1.0 / s);
  DistributedDirectionSolver engine(tree, index, scaled);

  DistributedResult out;
  CommLog& log = out.log;
  log.n_agents = tree.size();
  log.tree_height = tree.height();

  // Accounting convention: each agent takes part in one upward and one
  // downward phase per pass (msgs = 2); the scalar payloads are the
  // traffic on its parent edge, so the root reports zero scalars.
  auto log_pass = [&](int iter, int pass) {
    for (const AgentNode& nd : engine.nodes()) {
      CommRecord rec;
      rec.iter = iter;
      rec.pass = pass;
      rec.agent = nd.id;
      if (nd.parent >= 0) {
        switch (pass) {
          case 1:  // direction: quadratic up, separator values down
            rec.scalars_up = nd.s_k * (nd.s_k + 1) / 2 + nd.s_k;
            rec.scalars_down = nd.s_k;
            break;
          case 2:  // step sizes: two bounds up, (t_p, t_d) down
            rec.scalars_up = 2;
            rec.scalars_down = 2;
            break;
          case 3:  // perturbation + termination: complementarity pair,
                   // three local norm partials, one assembled-norm
                   // partial, shared dual-residual coordinates up;
                   // (delta, stop) down
            rec.scalars_up = 6 + nd.s_k;
            rec.scalars_down = 2;
            break;
        }
      }
      log.records.push_back(rec);
    }
  };

  out.result = run_pdipm(
      index, scaled, y0, opts,
      [&](const IterateState& st, const Residuals& res, const Scalings& scalings,
          int iter) {
        SearchDirection dir = engine.compute(st, res, scalings);
        log_pass(iter, 1);
        return dir;
      },
      [&](int iter) {
        log_pass(iter, 2);
        log_pass(iter, 3);
        log.iterations = iter;
      });
  unscale_result(out.result, index, subs, s);
  // drop the direction-pass rows of an iteration aborted mid-way
  std::erase_if(log.records, [&](const CommRecord& r) {
    return r.iter > out.result.iterations;
  });
  return out;
}

}  // namespace treeloc
