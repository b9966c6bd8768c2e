#include "treeloc/pdipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace treeloc {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd gather(const Eigen::VectorXd& y, const std::vector<int>& J) {
  Eigen::VectorXd out(J.size());
  for (size_t p = 0; p < J.size(); ++p) out[p] = y[J[p]];
  return out;
}

void scatter_add(Eigen::VectorXd& y, const std::vector<int>& J,
                 const Eigen::VectorXd& local) {
  for (size_t p = 0; p < J.size(); ++p) y[J[p]] += local[p];
}

// Largest t >= 0 with X + t * dX positive definite (possibly +inf),
// via the generalized eigenvalues of (dX, X).
double psd_step_bound(const Eigen::MatrixXd& X, const Eigen::MatrixXd& dX) {
  Eigen::LLT<Eigen::MatrixXd> llt(X);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("psd_step_bound: iterate not positive definite");
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd M = L.triangularView<Eigen::Lower>().solve(dX);
  M = L.triangularView<Eigen::Lower>().solve(M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                    Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  return lmin >= 0 ? kInf : -1.0 / lmin;
}

Eigen::VectorXd stack_blocks(const std::vector<Eigen::MatrixXd>& blocks) {
  int n = 0;
  for (const auto& B : blocks) n += svec_size(static_cast<int>(B.rows()));
  Eigen::VectorXd out(n);
  int at = 0;
  for (const auto& B : blocks) {
    Eigen::VectorXd v = svec(B);
    out.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
  }
  return out;
}

// Per-block Hx = F^{-1} U for one agent. With the NT scaling this equals
// skron(W_scal^{-1}, W_scal^{-1}), which is symmetric positive definite
// and better conditioned to assemble than an explicit F solve.
std::vector<Eigen::MatrixXd> hx_blocks(const std::vector<ScalingPoint>& scal) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(scal.size());
  for (const auto& s : scal) {
    Eigen::MatrixXd Winv = s.G_inv * s.G_inv;
    out.push_back(skron(Winv, Winv));
  }
  return out;
}

// Hy^k = D^T diag(lambda / (g - D y)) D over the agent's local coordinates.
Eigen::MatrixXd hy_local(const AgentSubproblem& sp, const Eigen::VectorXd& y_J,
                         const Eigen::VectorXd& lambda) {
  if (sp.D.rows() == 0)
    return Eigen::MatrixXd::Zero(sp.D.cols(), sp.D.cols());
  Eigen::VectorXd slack = sp.g - sp.D * y_J;  // > 0 strictly
  return sp.D.transpose() * (lambda.array() / slack.array()).matrix().asDiagonal() *
         sp.D;
}

// r_lin^k = r_d,lin^k - D^T E^{-1} r_c,lin^k with E = diag(D y - g).
Eigen::VectorXd r_lin_local(const AgentSubproblem& sp, const Eigen::VectorXd& y_J,
                            const Eigen::VectorXd& r_d_lin_k,
                            const Eigen::VectorXd& r_c_lin_k) {
  if (sp.D.rows() == 0) return r_d_lin_k;
  Eigen::VectorXd e = sp.D * y_J - sp.g;  // < 0 strictly
  return r_d_lin_k - sp.D.transpose() * (r_c_lin_k.array() / e.array()).matrix();
}

Eigen::VectorXd IterateState::x_stacked(int agent) const { return stack_blocks(X[agent]); }
Eigen::VectorXd IterateState::z_stacked(int agent) const { return stack_blocks(Z[agent]); }

IterateState initial_iterate(const GlobalVariableIndex& index,
                             const std::vector<AgentSubproblem>& subs,
                             const Eigen::VectorXd& y0) {
  if (y0.size() != index.n_y)
    throw std::invalid_argument("initial_iterate: y0 dimension mismatch");
  IterateState st;
  st.y = y0;
  const int q = static_cast<int>(subs.size());
  st.X.resize(q);
  st.Z.resize(q);
  st.v.resize(q);
  st.v_bar.resize(q);
  st.lambda.resize(q);
  for (int k = 0; k < q; ++k) {
    const AgentSubproblem& sp = subs[k];
    for (int o : sp.block_orders) {
      st.X[k].push_back(Eigen::MatrixXd::Identity(o, o));
      st.Z[k].push_back(Eigen::MatrixXd::Identity(o, o));
    }
    st.v[k] = Eigen::VectorXd::Zero(sp.n_x());
    st.v_bar[k] = Eigen::VectorXd::Zero(sp.A.rows());
    st.lambda[k] = Eigen::VectorXd::Ones(sp.D.rows());
    if (sp.D.rows() > 0) {
      Eigen::VectorXd e = sp.D * gather(y0, index.J[k]) - sp.g;
      if ((e.array() >= 0).any())
        throw std::invalid_argument(
            "initial_iterate: y0 not strictly feasible for the inequalities");
    }
  }
  st.delta = duality_measure(st, index, subs);
  return st;
}

Scalings compute_scalings(const IterateState& state,
                          const std::vector<AgentSubproblem>& subs) {
  Scalings out(subs.size());
  for (size_t k = 0; k < subs.size(); ++k)
    for (size_t j = 0; j < state.X[k].size(); ++j)
      out[k].push_back(nt_scaling(state.X[k][j], state.Z[k][j]));
  return out;
}

Residuals compute_residuals(const IterateState& state, const GlobalVariableIndex& index,
                            const std::vector<AgentSubproblem>& subs, double delta,
                            const Scalings& scalings) {
  const int q = static_cast<int>(subs.size());
  Residuals res;
  res.r_d_lin = Eigen::VectorXd::Zero(index.n_y);
  res.r_d_lin_k.resize(q);
  res.r_d.resize(q);
  res.r_c.resize(q);
  res.r_c_lin.resize(q);
  res.r_p.resize(q);
  res.r_p_lin.resize(q);
  for (int k = 0; k < q; ++k) {
    const AgentSubproblem& sp = subs[k];
    const auto& J = index.J[k];
    Eigen::VectorXd y_J = gather(state.y, J);
    Eigen::VectorXd x = state.x_stacked(k);
    Eigen::VectorXd z = state.z_stacked(k);

    res.r_d_lin_k[k] = -sp.c - sp.W.transpose() * state.v[k] -
                       sp.A.transpose() * state.v_bar[k] -
                       sp.D.transpose() * state.lambda[k];
    scatter_add(res.r_d_lin, J, res.r_d_lin_k[k]);

    res.r_d[k] = z - sp.Q.transpose() * state.v[k];

    Eigen::VectorXd rc(sp.n_x());
    int at = 0;
    for (size_t j = 0; j < state.X[k].size(); ++j) {
      const int o = sp.block_orders[j];
      Eigen::MatrixXd H = h_op(scalings[k][j].G_inv, state.X[k][j] * state.Z[k][j]);
      Eigen::VectorXd v = svec(delta * Eigen::MatrixXd::Identity(o, o) - H);
      rc.segment(at, v.size()) = v;
      at += static_cast<int>(v.size());
    }
    res.r_c[k] = rc;

    if (sp.D.rows() > 0) {
      Eigen::VectorXd e = sp.D * y_J - sp.g;
      res.r_c_lin[k] =
          -delta * Eigen::VectorXd::Ones(sp.D.rows()) -
          (state.lambda[k].array() * e.array()).matrix();
    } else {
      res.r_c_lin[k] = Eigen::VectorXd::Zero(0);
    }

    res.r_p[k] = sp.b - sp.Q * x - sp.W * y_J;
    res.r_p_lin[k] = sp.b_bar - sp.A * y_J;
  }
  return res;
}

std::pair<double, double> agent_complementarity(const IterateState& state,
                                                const GlobalVariableIndex& index,
                                                const std::vector<AgentSubproblem>& subs,
                                                int agent) {
  const AgentSubproblem& sp = subs[agent];
  double value = 0.0, count = 0.0;
  for (size_t j = 0; j < state.X[agent].size(); ++j) {
    value += state.X[agent][j].cwiseProduct(state.Z[agent][j]).sum();
    count += sp.block_orders[j];
  }
  if (sp.D.rows() > 0) {
    Eigen::VectorXd slack = sp.g - sp.D * gather(state.y, index.J[agent]);
    value += state.lambda[agent].dot(slack);
    count += static_cast<double>(sp.D.rows());
  }
  return {value, count};
}

double duality_measure(const IterateState& state, const GlobalVariableIndex& index,
                       const std::vector<AgentSubproblem>& subs) {
  double value = 0.0, count = 0.0;
  for (size_t k = 0; k < subs.size(); ++k) {
    auto [v, c] = agent_complementarity(state, index, subs, static_cast<int>(k));
    value += v;
    count += c;
  }
  return count > 0 ? value / count : 0.0;
}

std::pair<double, double> agent_step_bounds(const IterateState& state,
                                            const GlobalVariableIndex& index,
                                            const std::vector<AgentSubproblem>& subs,
                                            const SearchDirection& dir, int agent) {
  const AgentSubproblem& sp = subs[agent];
  double bp = kInf, bd = kInf;
  int at = 0;
  for (size_t j = 0; j < state.X[agent].size(); ++j) {
    const int m = svec_size(sp.block_orders[j]);
    Eigen::MatrixXd dX = smat(dir.dx[agent].segment(at, m));
    Eigen::MatrixXd dZ = smat(dir.dz[agent].segment(at, m));
    bp = std::min(bp, psd_step_bound(state.X[agent][j], dX));
    bd = std::min(bd, psd_step_bound(state.Z[agent][j], dZ));
    at += m;
  }
  if (sp.D.rows() > 0) {
    Eigen::VectorXd e = sp.D * gather(state.y, index.J[agent]) - sp.g;
    Eigen::VectorXd de = sp.D * gather(dir.dy, index.J[agent]);
    for (int r = 0; r < e.size(); ++r)
      if (de[r] > 0) bp = std::min(bp, -e[r] / de[r]);
    for (int r = 0; r < state.lambda[agent].size(); ++r)
      if (dir.dlambda[agent][r] < 0)
        bd = std::min(bd, -state.lambda[agent][r] / dir.dlambda[agent][r]);
  }
  return {bp, bd};
}

void apply_step(IterateState& state, const std::vector<AgentSubproblem>& subs,
                const SearchDirection& dir, double t_p, double t_d) {
  state.y += t_p * dir.dy;
  for (size_t k = 0; k < subs.size(); ++k) {
    int bat = 0;
    for (size_t j = 0; j < state.X[k].size(); ++j) {
      const int m = svec_size(subs[k].block_orders[j]);
      state.X[k][j] += t_p * smat(dir.dx[k].segment(bat, m));
      state.Z[k][j] += t_d * smat(dir.dz[k].segment(bat, m));
      bat += m;
    }
    state.v[k] += t_d * dir.dv[k];
    state.v_bar[k] += t_d * dir.dv_bar[k];
    state.lambda[k] += t_d * dir.dlambda[k];
  }
}

std::pair<double, double> step_sizes(const IterateState& state,
                                     const GlobalVariableIndex& index,
                                     const std::vector<AgentSubproblem>& subs,
                                     const SearchDirection& dir, double gamma) {
  double bp = kInf, bd = kInf;
  for (size_t k = 0; k < subs.size(); ++k) {
    auto [p, d] = agent_step_bounds(state, index, subs, dir, static_cast<int>(k));
    bp = std::min(bp, p);
    bd = std::min(bd, d);
  }
  return {std::min(1.0, gamma * bp), std::min(1.0, gamma * bd)};
}

SearchDirection solve_kkt_centralized(const IterateState& state,
                                      const GlobalVariableIndex& index,
                                      const std::vector<AgentSubproblem>& subs,
                                      const Residuals& res, const Scalings& scalings) {
  const int q = static_cast<int>(subs.size());
  // Q^k is the identity by construction, so dx and dv are eliminated:
  //   dx = r_p - W dy,   dv = r - Hx dx,
  // leaving a condensed saddle-point system in (dy, dv_bar):
  //   [ Hy + sum W^T Hx W    A^T ] [ dy    ]   [ r_lin - W^T(r - Hx r_p) ]
  //   [ A                    0   ] [ dv_bar] = [ r_p,lin                 ]
  std::vector<int> vb_off(q);
  int at = index.n_y;
  for (int k = 0; k < q; ++k) {
    vb_off[k] = at;
    at += static_cast<int>(subs[k].A.rows());
  }
  const int n_tot = at;

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_tot, n_tot);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_tot);
  rhs.head(index.n_y) = res.r_d_lin;

  std::vector<Eigen::VectorXd> r_store(q);
  std::vector<std::vector<Eigen::MatrixXd>> hx_store(q);
  for (int k = 0; k < q; ++k) {
    const AgentSubproblem& sp = subs[k];
    const auto& J = index.J[k];
    const int nj = static_cast<int>(J.size());
    const int nx = sp.n_x();
    const int nl = static_cast<int>(sp.A.rows());
    Eigen::VectorXd y_J = gather(state.y, J);

    hx_store[k] = hx_blocks(scalings[k]);
    // r^k = r_d + F^{-1} r_c, block by block
    Eigen::VectorXd r = res.r_d[k];
    Eigen::MatrixXd HxW(nx, nj);
    Eigen::VectorXd Hx_rp(nx);
    int bat = 0;
    for (size_t j = 0; j < scalings[k].size(); ++j) {
      const int m = svec_size(sp.block_orders[j]);
      r.segment(bat, m) +=
          scalings[k][j].F_op.partialPivLu().solve(res.r_c[k].segment(bat, m));
      HxW.middleRows(bat, m) = hx_store[k][j] * sp.W.middleRows(bat, m);
      Hx_rp.segment(bat, m) = hx_store[k][j] * res.r_p[k].segment(bat, m);
      bat += m;
    }
    r_store[k] = r;

    Eigen::MatrixXd Hloc =
        hy_local(sp, y_J, state.lambda[k]) + sp.W.transpose() * HxW;
    for (int a = 0; a < nj; ++a)
      for (int b = 0; b < nj; ++b) M(J[a], J[b]) += Hloc(a, b);

    Eigen::VectorXd corr =
        r_lin_local(sp, y_J, res.r_d_lin_k[k], res.r_c_lin[k]) - res.r_d_lin_k[k];
    scatter_add(rhs, J, Eigen::VectorXd(corr - sp.W.transpose() * (r - Hx_rp)));

    for (int rrow = 0; rrow < nl; ++rrow)
      for (int b = 0; b < nj; ++b) {
        double w = sp.A(rrow, b);
        if (w != 0.0) {
          M(vb_off[k] + rrow, J[b]) = w;
          M(J[b], vb_off[k] + rrow) = w;
        }
      }
    rhs.segment(vb_off[k], nl) = res.r_p_lin[k];
  }

  RefinedSymIndefSolver solver(M);
  if (solver.singular()) throw std::runtime_error("pdipm: KKT matrix singular");
  Eigen::VectorXd sol = solver.solve(rhs);

  SearchDirection dir;
  dir.dy = sol.head(index.n_y);
  dir.dx.resize(q);
  dir.dz.resize(q);
  dir.dv.resize(q);
  dir.dv_bar.resize(q);
  dir.dlambda.resize(q);
  for (int k = 0; k < q; ++k) {
    const AgentSubproblem& sp = subs[k];
    const int nl = static_cast<int>(sp.A.rows());
    Eigen::VectorXd dy_J = gather(dir.dy, index.J[k]);
    dir.dv_bar[k] = sol.segment(vb_off[k], nl);
    dir.dx[k] = res.r_p[k] - sp.W * dy_J;
    dir.dv[k] = r_store[k];
    int bat = 0;
    for (size_t j = 0; j < scalings[k].size(); ++j) {
      const int m = svec_size(sp.block_orders[j]);
      dir.dv[k].segment(bat, m) -= hx_store[k][j] * dir.dx[k].segment(bat, m);
      bat += m;
    }
    // dz via dual stationarity (equivalent to F^{-1}(r_c - U dx) for an
    // exact direction, but avoids amplifying solve error by cond(F) when
    // blocks approach the cone boundary)
    dir.dz[k] = sp.Q.transpose() * dir.dv[k] - res.r_d[k];
    if (sp.D.rows() > 0) {
      Eigen::VectorXd e = sp.D * gather(state.y, index.J[k]) - sp.g;
      Eigen::VectorXd dDy = sp.D * dy_J;
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

double direction_residual(const IterateState& state, const GlobalVariableIndex& index,
                          const std::vector<AgentSubproblem>& subs, const Residuals& res,
                          const Scalings& scalings, const SearchDirection& dir) {
  double worst = 0.0, scale = 1.0;
  Eigen::VectorXd eq1 = -res.r_d_lin;
  scale = std::max(scale, res.r_d_lin.lpNorm<Eigen::Infinity>());
  for (size_t k = 0; k < subs.size(); ++k) {
    const AgentSubproblem& sp = subs[k];
    const auto& J = index.J[k];
    Eigen::VectorXd dy_J = gather(dir.dy, J);
    scatter_add(eq1, J,
                Eigen::VectorXd(sp.W.transpose() * dir.dv[k] +
                                sp.A.transpose() * dir.dv_bar[k] +
                                sp.D.transpose() * dir.dlambda[k]));

    Eigen::VectorXd eq2 = sp.Q.transpose() * dir.dv[k] - dir.dz[k] - res.r_d[k];
    Eigen::VectorXd eq3(sp.n_x());
    int bat = 0;
    for (size_t j = 0; j < scalings[k].size(); ++j) {
      const int m = svec_size(sp.block_orders[j]);
      eq3.segment(bat, m) = scalings[k][j].U_op * dir.dx[k].segment(bat, m) +
                            scalings[k][j].F_op * dir.dz[k].segment(bat, m) -
                            res.r_c[k].segment(bat, m);
      bat += m;
    }
    Eigen::VectorXd eq5 = sp.Q * dir.dx[k] + sp.W * dy_J - res.r_p[k];
    Eigen::VectorXd eq6 = sp.A * dy_J - res.r_p_lin[k];
    for (const Eigen::VectorXd* v : {&eq2, &eq3, &eq5, &eq6})
      if (v->size() > 0) worst = std::max(worst, v->lpNorm<Eigen::Infinity>());
    if (sp.D.rows() > 0) {
      Eigen::VectorXd e = sp.D * gather(state.y, J) - sp.g;
      Eigen::VectorXd eq4 = (e.array() * dir.dlambda[k].array() +
                             state.lambda[k].array() * (sp.D * dy_J).array())
                                .matrix() -
                            res.r_c_lin[k];
      worst = std::max(worst, eq4.lpNorm<Eigen::Infinity>());
      scale = std::max(scale, res.r_c_lin[k].lpNorm<Eigen::Infinity>());
    }
    for (const Eigen::VectorXd* v : {&res.r_d[k], &res.r_c[k], &res.r_p[k],
                                     &res.r_p_lin[k]})
      if (v->size() > 0) scale = std::max(scale, v->lpNorm<Eigen::Infinity>());
  }
  worst = std::max(worst, eq1.lpNorm<Eigen::Infinity>());
  return worst / scale;
}

std::array<double, 4> feasibility_norms(const IterateState& state,
                                        const GlobalVariableIndex& index,
                                        const std::vector<AgentSubproblem>& subs) {
  double sp2 = 0, spl2 = 0, sd2 = 0;
  Eigen::VectorXd r_d_lin = Eigen::VectorXd::Zero(index.n_y);
  for (size_t k = 0; k < subs.size(); ++k) {
    const AgentSubproblem& sp = subs[k];
    const auto& J = index.J[k];
    Eigen::VectorXd y_J = gather(state.y, J);
    Eigen::VectorXd x = state.x_stacked(static_cast<int>(k));
    Eigen::VectorXd z = state.z_stacked(static_cast<int>(k));
    sp2 += (sp.b - sp.Q * x - sp.W * y_J).squaredNorm();
    spl2 += (sp.b_bar - sp.A * y_J).squaredNorm();
    sd2 += (z - sp.Q.transpose() * state.v[k]).squaredNorm();
    scatter_add(r_d_lin, J,
                Eigen::VectorXd(-sp.c - sp.W.transpose() * state.v[k] -
                                sp.A.transpose() * state.v_bar[k] -
                                sp.D.transpose() * state.lambda[k]));
  }
  return {std::sqrt(sp2), std::sqrt(spl2), std::sqrt(sd2), r_d_lin.norm()};
}

double rhs_norm(const std::vector<AgentSubproblem>& subs) {
  double s = 0;
  for (const auto& sp : subs) s += sp.b.squaredNorm() + sp.b_bar.squaredNorm();
  return std::sqrt(s);
}

SolveResult run_pdipm(const GlobalVariableIndex& index,
                      const std::vector<AgentSubproblem>& subs,
                      const Eigen::VectorXd& y0, const SolverOptions& opts,
                      const DirectionFn& direction, const IterationObserver& observer) {
  IterateState st = initial_iterate(index, subs, y0);
  const double bnorm = rhs_norm(subs);
  SolveResult out;
  out.status = "max-iterations";
  int iter = 0;
  for (iter = 1; iter <= opts.max_iters; ++iter) {
    SearchDirection dir;
    double t_p = 0, t_d = 0;
    try {
      Scalings scalings = compute_scalings(st, subs);
      Residuals res = compute_residuals(st, index, subs, st.delta, scalings);
      dir = direction(st, res, scalings, iter);
      std::tie(t_p, t_d) = step_sizes(st, index, subs, dir, opts.gamma);
    } catch (const std::exception&) {
      // singular KKT system or numerical loss of strict interiority
      out.status = "kkt-singular";
      --iter;
      break;
    }

    apply_step(st, subs, dir, t_p, t_d);
    double mu = duality_measure(st, index, subs);
    st.delta = opts.sigma_c * mu;
    auto norms = feasibility_norms(st, index, subs);
    double feas = *std::max_element(norms.begin(), norms.end()) / (1.0 + bnorm);

    if (opts.collect_trace) {
      IterationRecord rec;
      rec.iter = iter;
      rec.mu = mu;
      rec.delta = st.delta;
      rec.t_p = t_p;
      rec.t_d = t_d;
      rec.norm_r_p = norms[0];
      rec.norm_r_p_lin = norms[1];
      rec.norm_r_d = norms[2];
      rec.norm_r_d_lin = norms[3];
      out.trace.push_back(rec);
    }
    out.mu_final = mu;
    out.feas_final = feas;
    if (observer) observer(iter);
    if (feas <= opts.eps_feas && mu <= opts.eps_gap) {
      out.status = "converged";
      break;
    }
  }
  out.iterations = std::min(iter, opts.max_iters);
  out.y = st.y;
  out.X = st.X;
  out.objective = evaluate_objective(index, subs, st.y);
  out.final_state = st;
  return out;
}

double cost_normalization(const std::vector<AgentSubproblem>& subs) {
  double s = 1.0;
  for (const auto& sp : subs)
    if (sp.c.size() > 0) s = std::max(s, sp.c.lpNorm<Eigen::Infinity>());
  return s;
}

std::vector<AgentSubproblem> scale_costs(const std::vector<AgentSubproblem>& subs,
                                         double factor) {
  std::vector<AgentSubproblem> out = subs;
  for (auto& sp : out) {
    sp.c *= factor;
    sp.offset *= factor;
    sp.reg_offset *= factor;
  }
  return out;
}

void unscale_result(SolveResult& result, const GlobalVariableIndex& index,
                    const std::vector<AgentSubproblem>& original_subs, double s) {
  IterateState& st = result.final_state;
  for (size_t k = 0; k < st.v.size(); ++k) {
    st.v[k] *= s;
    st.v_bar[k] *= s;
    st.lambda[k] *= s;
    for (auto& Z : st.Z[k]) Z *= s;
  }
  result.objective = evaluate_objective(index, original_subs, result.y);
  result.mu_final = duality_measure(st, index, original_subs);
  auto norms = feasibility_norms(st, index, original_subs);
  result.feas_final = *std::max_element(norms.begin(), norms.end()) /
                      (1.0 + rhs_norm(original_subs));
}

SolveResult solve_centralized(const GlobalVariableIndex& index,
                              const std::vector<AgentSubproblem>& subs,
                              const Eigen::VectorXd& y0, const SolverOptions& opts) {
  const double s = cost_normalization(subs);
  const std::vector<AgentSubproblem> scaled = scale_costs(subs, 1.0 / s);
  SolveResult result =
      run_pdipm(index, scaled, y0, opts,
                [&](const IterateState& st, const Residuals& res,
                    const Scalings& scalings, int) {
                  return solve_kkt_centralized(st, index, scaled, res, scalings);
                });
  unscale_result(result, index, subs, s);
  return result;
}

Eigen::VectorXd initial_y(const GlobalVariableIndex& index, const NetworkScenario& scn) {
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(index.n_y);
  for (size_t m = 0; m < scn.range_measurements.size(); ++m)
    y0[index.dcap_idx[m]] = std::max(scn.range_measurements[m].value, 0.1);
  for (size_t m = 0; m < scn.anchor_measurements.size(); ++m)
    y0[index.zslack_idx[m]] = std::max(scn.anchor_measurements[m].value, 0.1);
  return y0;
}

}  // namespace treeloc
