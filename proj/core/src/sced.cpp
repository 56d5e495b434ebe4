#include "drt/sced.hpp"

#include "drt/errors.hpp"

namespace drt {

Eigen::MatrixXd ScedQp::ineq_matrix() const {
  const int N = n(), L = l();
  Eigen::MatrixXd A(2 * L + 2 * N, N);
  A.topRows(L) = H;
  A.middleRows(L, L) = -H;
  A.middleRows(2 * L, N) = Eigen::MatrixXd::Identity(N, N);
  A.bottomRows(N) = -Eigen::MatrixXd::Identity(N, N);
  return A;
}

Eigen::VectorXd ScedQp::ineq_rhs(const Eigen::VectorXd& load) const {
  const int N = n(), L = l();
  if (load.size() != N) throw ValidationError("ineq_rhs: load length mismatch");
  Eigen::VectorXd b(2 * L + 2 * N);
  const Eigen::VectorXd hl = L > 0 ? Eigen::VectorXd(H * load)
                                   : Eigen::VectorXd::Zero(0);
  b.head(L) = f + hl;
  b.segment(L, L) = f - hl;
  b.segment(2 * L, N) = pmax;
  b.tail(N) = -pmin;
  return b;
}

QpProblem ScedQp::qp_at(const Eigen::VectorXd& load) const {
  QpProblem p;
  p.Q = a.asDiagonal();
  p.q = b_cost;
  p.has_eq = true;
  p.e = Eigen::VectorXd::Ones(n());
  p.e_rhs = load.sum();
  p.A = ineq_matrix();
  p.b = ineq_rhs(load);
  return p;
}

ScedQp assemble(const NetworkCase& net) {
  const int N = net.n();
  ScedQp s;
  s.a.resize(N);
  s.b_cost.resize(N);
  s.c_fix.resize(N);
  s.pmin.resize(N);
  s.pmax.resize(N);
  for (int i = 0; i < N; ++i) {
    const Generator& g = net.gens[i];
    s.a(i) = g.a;
    s.b_cost(i) = g.b;
    s.c_fix(i) = g.c;
    s.pmin(i) = g.pmin;
    s.pmax(i) = g.pmax;
  }
  s.H = build_shift_factors(net);
  s.f.resize(net.l());
  for (int e = 0; e < net.l(); ++e) s.f(e) = net.lines[e].limit;
  return s;
}

DispatchResult dispatch(const ScedQp& sced, const Eigen::VectorXd& load,
                        const QpOptions& opt) {
  const int N = sced.n(), L = sced.l();
  if (load.size() != N) {
    throw ValidationError("dispatch: load length mismatch");
  }

  QpSolution qs;
  try {
    qs = solve_qp(sced.qp_at(load), opt);
  } catch (const InfeasibleError&) {
    throw InfeasibleError(
        "dispatch: no feasible generation for the given load");
  }

  DispatchResult r;
  r.generation = qs.x;
  // The balance multiplier carries the internal Lagrangian sign; prices are
  // marginal costs of load, hence the flip.
  r.gamma = -qs.eq_dual;
  r.mu_upper = qs.ineq_dual.head(L);
  r.mu_lower = qs.ineq_dual.segment(L, L);
  r.psi_upper = qs.ineq_dual.segment(2 * L, N);
  r.psi_lower = qs.ineq_dual.tail(N);
  r.lmp = Eigen::VectorXd::Constant(N, r.gamma);
  if (L > 0) r.lmp -= sced.H.transpose() * (r.mu_upper - r.mu_lower);
  r.active_set = qs.active_set;
  r.weakly_active = qs.weakly_active;
  for (int row : qs.active_set) {
    if (row < L) {
      r.binding_lines_upper.push_back(row);
    } else if (row < 2 * L) {
      r.binding_lines_lower.push_back(row - L);
    } else if (row < 2 * L + N) {
      r.binding_gens_upper.push_back(row - 2 * L);
    } else {
      r.binding_gens_lower.push_back(row - 2 * L - N);
    }
  }
  r.objective = qs.objective + sced.c_fix.sum();
  r.residuals = qs.residuals;
  r.iterations = qs.iterations;
  return r;
}

}  // namespace drt
