#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace drt {

// Strictly convex QP
//   min  1/2 x'Q x + q'x
//   s.t. e'x = rhs          (optional single balance row)
//        A x <= b
// Q must be symmetric positive definite.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  bool has_eq = false;
  Eigen::VectorXd e;
  double e_rhs = 0.0;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct QpOptions {
  double eps_act = 1e-7;             // activity tolerance on slacks/duals
  int max_iter = 0;                  // 0 = scale with problem size
  std::vector<int> warm_start;       // initial working set (row indices)
};

struct QpResiduals {
  double stationarity = 0.0;  // ||Qx + q + gamma e + A'mu||_inf
  double primal = 0.0;        // worst constraint violation
  double dual = 0.0;          // worst negative multiplier, as a magnitude
  double complementarity = 0.0;
};

struct QpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  double eq_dual = 0.0;             // multiplier on e'x = rhs (zero if absent)
  Eigen::VectorXd ineq_dual;        // one entry per row of A, zero off-support
  std::vector<int> active_set;      // rows with |a_j'x - b_j| <= eps_act
  std::vector<int> weakly_active;   // active rows whose multiplier < eps_act
  QpResiduals residuals;
  int iterations = 0;
};

// Dense primal active-set solver.  Deterministic: ties in the ratio test and
// in dual-driven removals are broken by lowest row index.  Throws
// ValidationError on a malformed problem, InfeasibleError when the constraints
// admit no point, NumericsError on breakdown.
QpSolution solve_qp(const QpProblem& prob, const QpOptions& opt = {});

}  // namespace drt
