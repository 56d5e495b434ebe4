#pragma once

#include <Eigen/Dense>
#include <vector>

#include "drt/network.hpp"
#include "drt/qp.hpp"

namespace drt {

// Dispatch problem data with the network folded into shift factors:
//   min  sum_i 1/2 a_i g_i^2 + b_i g_i + c_i
//   s.t. 1'g = 1'load
//        -f <= H (g - load) <= f
//        pmin <= g <= pmax
// Everything is node-aligned; load is a full nodal vector.
struct ScedQp {
  Eigen::VectorXd a, b_cost, c_fix;
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::VectorXd pmin, pmax;

  int n() const { return static_cast<int>(a.size()); }
  int l() const { return static_cast<int>(f.size()); }

  // Stacked inequality rows over g, in the fixed order
  //   [ H ; -H ; I ; -I ]  (line upper, line lower, gen upper, gen lower).
  Eigen::MatrixXd ineq_matrix() const;
  Eigen::VectorXd ineq_rhs(const Eigen::VectorXd& load) const;
  QpProblem qp_at(const Eigen::VectorXd& load) const;
};

ScedQp assemble(const NetworkCase& net);

struct DispatchResult {
  Eigen::VectorXd generation;
  Eigen::VectorXd lmp;
  double gamma = 0.0;  // system marginal price (balance component of the LMP)
  Eigen::VectorXd mu_upper, mu_lower;    // congestion duals per line
  Eigen::VectorXd psi_upper, psi_lower;  // capacity duals per generator
  std::vector<int> binding_lines_upper, binding_lines_lower;
  std::vector<int> binding_gens_upper, binding_gens_lower;
  std::vector<int> active_set;  // stacked-row indices, matching ineq_matrix()
  std::vector<int> weakly_active;
  double objective = 0.0;  // dispatch cost including fixed terms
  QpResiduals residuals;
  int iterations = 0;
};

// Solve the dispatch QP at one load vector.  LMPs come out of the duals as
//   lmp = gamma * 1 - H' (mu_upper - mu_lower),
// i.e. the marginal cost of serving one more MW at each node.
DispatchResult dispatch(const ScedQp& sced, const Eigen::VectorXd& load,
                        const QpOptions& opt = {});

}  // namespace drt
