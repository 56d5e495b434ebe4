#include "drt/qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "drt/errors.hpp"
#include "drt/polytope.hpp"

namespace drt {
namespace {

constexpr double kStepTol = 1e-11;   // "no move" threshold for EQP steps
constexpr double kDualTol = 1e-11;   // multiplier negativity that forces a drop
constexpr double kDirTol = 1e-12;    // a_j'p below this is "parallel"

struct Eqp {
  Eigen::VectorXd x;
};

struct EqpDuals {
  double eq_dual = 0.0;
  Eigen::VectorXd w_dual;  // one per working row, in working-set order
};

// Stack the balance row (if any) on top of the working rows.
void working_rows(const QpProblem& prob, const std::vector<int>& W,
                  Eigen::MatrixXd& E, Eigen::VectorXd& d) {
  const int n = static_cast<int>(prob.q.size());
  const int k_eq = prob.has_eq ? 1 : 0;
  const int k = k_eq + static_cast<int>(W.size());
  E.resize(k, n);
  d.resize(k);
  if (prob.has_eq) {
    E.row(0) = prob.e.transpose();
    d(0) = prob.e_rhs;
  }
  for (size_t i = 0; i < W.size(); ++i) {
    E.row(k_eq + static_cast<int>(i)) = prob.A.row(W[i]);
    d(k_eq + static_cast<int>(i)) = prob.b(W[i]);
  }
}

// Solve the equality-constrained subproblem for working set W:
//   min 1/2 x'Qx + q'x  s.t.  e'x = rhs (if present),  A_W x = b_W.
// Null-space method: a min-norm particular point plus a reduced solve over
// the constraint kernel. Unlike a Schur complement through Q^-1, this keeps
// the working rows satisfied to machine precision even when Q is nearly
// singular (e.g. a rank-one objective with a tiny ridge), which the outer
// active-set loop depends on to avoid stalling. Duplicated rows (a generator
// pinned by pmin == pmax contributes a +/- pair) are fine: the particular
// solve tolerates consistent redundancy and the multipliers come out
// min-norm.
Eqp solve_eqp(const Eigen::LLT<Eigen::MatrixXd>& llt, const QpProblem& prob,
              const std::vector<int>& W) {
  Eqp out;
  if (!prob.has_eq && W.empty()) {
    out.x = llt.solve(-prob.q);
    return out;
  }

  Eigen::MatrixXd E;
  Eigen::VectorXd d;
  working_rows(prob, W, E, d);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codE(E);
  Eigen::VectorXd x = codE.solve(d);
  if ((E * x - d).lpNorm<Eigen::Infinity>() >
      1e-8 * (1.0 + d.lpNorm<Eigen::Infinity>())) {
    throw NumericsError("solve_qp: inconsistent working-set system");
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
  if (lu.dimensionOfKernel() > 0) {
    const Eigen::MatrixXd K = lu.kernel();
    const Eigen::MatrixXd H = K.transpose() * prob.Q * K;
    const Eigen::VectorXd rhs = -K.transpose() * (prob.q + prob.Q * x);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success) {
      throw NumericsError("solve_qp: reduced system is not solvable");
    }
    x += K * ldlt.solve(rhs);
  }
  out.x = x;
  return out;
}

// Multipliers from stationarity at the subproblem optimum x:
//   E' nu = -(Qx + q), min-norm.
// Only meaningful (and only called) once the step out of x is negligible;
// mid-iteration points on a nearly flat objective would fail the residual
// check for harmless reasons.
EqpDuals eqp_duals(const QpProblem& prob, const std::vector<int>& W,
                   const Eigen::VectorXd& x) {
  EqpDuals out;
  const int k_eq = prob.has_eq ? 1 : 0;
  const int k = k_eq + static_cast<int>(W.size());
  if (k == 0) return out;

  Eigen::MatrixXd E;
  Eigen::VectorXd d;
  working_rows(prob, W, E, d);

  const Eigen::VectorXd g = prob.Q * x + prob.q;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codEt(
      E.transpose().eval());
  const Eigen::VectorXd nu = codEt.solve(-g);
  if ((E.transpose() * nu + g).lpNorm<Eigen::Infinity>() >
      1e-7 * (1.0 + g.lpNorm<Eigen::Infinity>())) {
    throw NumericsError("solve_qp: inconsistent working-set system");
  }
  if (prob.has_eq) out.eq_dual = nu(0);
  out.w_dual = nu.tail(k - k_eq);
  return out;
}

// Interior-ish feasible point via the Chebyshev ball of the constraint set,
// with the balance row folded in as a two-sided pair and then re-tightened.
Eigen::VectorXd phase_one(const QpProblem& prob) {
  const int n = static_cast<int>(prob.q.size());
  const int m = static_cast<int>(prob.A.rows());
  const int k_eq = prob.has_eq ? 2 : 0;

  Polytope p;
  p.R.resize(m + k_eq, n);
  p.r.resize(m + k_eq);
  if (m > 0) {
    p.R.topRows(m) = prob.A;
    p.r.head(m) = prob.b;
  }
  if (prob.has_eq) {
    p.R.row(m) = prob.e.transpose();
    p.r(m) = prob.e_rhs;
    p.R.row(m + 1) = -prob.e.transpose();
    p.r(m + 1) = -prob.e_rhs;
  }
  const ChebyshevResult c = chebyshev_center(p);
  if (!c.feasible) throw InfeasibleError("solve_qp: constraints are infeasible");

  Eigen::VectorXd x = c.center;
  if (prob.has_eq) {
    const double en2 = prob.e.squaredNorm();
    if (en2 <= 0.0) throw ValidationError("solve_qp: zero balance row");
    x += prob.e * ((prob.e_rhs - prob.e.dot(x)) / en2);
  }
  return x;
}

}  // namespace

QpSolution solve_qp(const QpProblem& prob, const QpOptions& opt) {
  const int n = static_cast<int>(prob.q.size());
  const int m = static_cast<int>(prob.A.rows());
  if (prob.Q.rows() != n || prob.Q.cols() != n) {
    throw ValidationError("solve_qp: Q/q dimension mismatch");
  }
  if (m > 0 && prob.A.cols() != n) {
    throw ValidationError("solve_qp: A column count mismatch");
  }
  if (prob.b.size() != m) {
    throw ValidationError("solve_qp: A/b row count mismatch");
  }
  if (prob.has_eq && prob.e.size() != n) {
    throw ValidationError("solve_qp: balance row dimension mismatch");
  }
  const double qscale = prob.Q.cwiseAbs().maxCoeff();
  if ((prob.Q - prob.Q.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + qscale)) {
    throw ValidationError("solve_qp: Q must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(prob.Q);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("solve_qp: Q must be positive definite");
  }

  QpSolution sol;
  sol.ineq_dual = Eigen::VectorXd::Zero(m);

  // Unconstrained shortcut.
  if (m == 0 && !prob.has_eq) {
    sol.x = llt.solve(-prob.q);
    sol.objective = 0.5 * sol.x.dot(prob.Q * sol.x) + prob.q.dot(sol.x);
    sol.residuals.stationarity =
        (prob.Q * sol.x + prob.q).lpNorm<Eigen::Infinity>();
    return sol;
  }

  // Starting point and working set.
  Eigen::VectorXd x;
  std::vector<int> W;
  bool warm_ok = false;
  if (!opt.warm_start.empty()) {
    std::vector<int> W0 = opt.warm_start;
    std::sort(W0.begin(), W0.end());
    W0.erase(std::unique(W0.begin(), W0.end()), W0.end());
    if (!W0.empty() && W0.front() >= 0 && W0.back() < m &&
        static_cast<int>(W0.size()) + (prob.has_eq ? 1 : 0) <= n) {
      try {
        const Eqp eqp = solve_eqp(llt, prob, W0);
        const double viol =
            m > 0 ? (prob.A * eqp.x - prob.b).maxCoeff() : 0.0;
        if (viol <= 1e-8) {
          x = eqp.x;
          W = W0;
          warm_ok = true;
        }
      } catch (const NumericsError&) {
        // dependent warm-start rows: fall through to the cold start
      }
    }
  }
  if (!warm_ok) x = phase_one(prob);

  const int cap = opt.max_iter > 0 ? opt.max_iter : 100 + 50 * (m + n);
  bool converged = false;
  for (int it = 0; it < cap; ++it) {
    sol.iterations = it + 1;
    const Eqp eqp = solve_eqp(llt, prob, W);
    const Eigen::VectorXd p = eqp.x - x;

    if (p.lpNorm<Eigen::Infinity>() <=
        kStepTol * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      // On the working-set optimum: leave if some multiplier says so.
      const EqpDuals duals = eqp_duals(prob, W, eqp.x);
      int drop = -1;
      double worst = -kDualTol;
      for (size_t i = 0; i < W.size(); ++i) {
        if (duals.w_dual(static_cast<int>(i)) < worst) {
          worst = duals.w_dual(static_cast<int>(i));
          drop = static_cast<int>(i);
        }
      }
      if (drop < 0) {
        x = eqp.x;
        sol.eq_dual = duals.eq_dual;
        for (size_t i = 0; i < W.size(); ++i) {
          sol.ineq_dual(W[i]) = std::max(duals.w_dual(static_cast<int>(i)), 0.0);
        }
        converged = true;
        break;
      }
      W.erase(W.begin() + drop);
      continue;
    }

    // Ratio test against rows outside W; slacks clip at zero so a start
    // point with roundoff-level violations still behaves.
    double alpha = 1.0;
    int block = -1;
    for (int j = 0; j < m; ++j) {
      if (std::find(W.begin(), W.end(), j) != W.end()) continue;
      const double dir = prob.A.row(j).dot(p);
      if (dir <= kDirTol) continue;
      const double slack = std::max(prob.b(j) - prob.A.row(j).dot(x), 0.0);
      const double aj = slack / dir;
      if (aj < alpha - 1e-12) {
        alpha = aj;
        block = j;
      } else if (block >= 0 && std::abs(aj - alpha) <= 1e-12 && j < block) {
        block = j;
      }
    }
    x += alpha * p;
    if (block >= 0) {
      W.insert(std::upper_bound(W.begin(), W.end(), block), block);
    }
  }
  if (!converged) throw NumericsError("solve_qp: iteration cap exceeded");

  sol.x = x;
  sol.objective = 0.5 * x.dot(prob.Q * x) + prob.q.dot(x);

  // Classify activity on slacks, then flag weak support.
  for (int j = 0; j < m; ++j) {
    if (std::abs(prob.A.row(j).dot(x) - prob.b(j)) <= opt.eps_act) {
      sol.active_set.push_back(j);
      if (sol.ineq_dual(j) < opt.eps_act) sol.weakly_active.push_back(j);
    }
  }

  Eigen::VectorXd grad = prob.Q * x + prob.q;
  if (prob.has_eq) grad += sol.eq_dual * prob.e;
  if (m > 0) grad += prob.A.transpose() * sol.ineq_dual;
  sol.residuals.stationarity = grad.lpNorm<Eigen::Infinity>();
  double primal = 0.0;
  if (m > 0) primal = std::max(primal, (prob.A * x - prob.b).maxCoeff());
  if (prob.has_eq) primal = std::max(primal, std::abs(prob.e.dot(x) - prob.e_rhs));
  sol.residuals.primal = std::max(primal, 0.0);
  sol.residuals.dual = m > 0 ? std::max(0.0, -sol.ineq_dual.minCoeff()) : 0.0;
  double comp = 0.0;
  for (int j = 0; j < m; ++j) {
    comp = std::max(comp,
                    std::abs(sol.ineq_dual(j) * (prob.A.row(j).dot(x) - prob.b(j))));
  }
  sol.residuals.complementarity = comp;
  return sol;
}

}  // namespace drt
