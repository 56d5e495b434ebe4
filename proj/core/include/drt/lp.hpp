#pragma once

#include <Eigen/Dense>

namespace drt {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;     // argmax, valid only when status == Optimal
  double value = 0.0;    // c'x at the optimum
};

// Maximize c'x subject to A x <= b over free x.
//
// Dense two-phase tableau simplex with Bland's rule, so it terminates and is
// fully deterministic.  Intended for the small polytopes this project works
// with (tens of rows, a handful of dimensions), not for anything large.
LpResult solve_lp_max(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b);

// Convenience wrapper: minimize c'x subject to A x <= b.
LpResult solve_lp_min(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b);

}  // namespace drt
