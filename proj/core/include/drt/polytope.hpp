#pragma once

#include <Eigen/Dense>
#include <string>

namespace drt {

// Closed polyhedron { z : R z <= r } in row form.  Rows are kept exactly as
// given (no implicit normalization); ops that need scaled rows do it
// internally.  `tag` is a free-form label used when polytopes are reported
// back to users (region ids and the like).
struct Polytope {
  Eigen::MatrixXd R;
  Eigen::VectorXd r;
  std::string tag;

  int dim() const { return static_cast<int>(R.cols()); }
  int rows() const { return static_cast<int>(R.rows()); }
};

struct ChebyshevResult {
  bool feasible = false;     // some point satisfies R z <= r + 1e-9
  Eigen::VectorXd center;    // valid when feasible
  double radius = -1.0;      // radius of the largest inscribed ball
};

// Largest inscribed ball.  Unbounded polytopes are handled by boxing the
// center search at |z_j| <= 1e7, which caps the reported radius; within the
// load-box scales this project works at, the cap is never binding.
ChebyshevResult chebyshev_center(const Polytope& p);

// Cheap feasibility probe: verdict plus an interior-ish witness point.
struct FeasibilityWitness {
  bool feasible = false;
  Eigen::VectorXd point;
};
FeasibilityWitness lp_feasible(const Polytope& p);

bool contains(const Polytope& p, const Eigen::VectorXd& z, double tol = 1e-9);

// Stack the rows of both operands; tag is inherited from `a`.
Polytope intersect(const Polytope& a, const Polytope& b);

// Drop every redundant row, keeping the original order of the survivors.
// A row is redundant when maximizing it over the remaining rows stays within
// 1e-9 of its bound.  Throws InfeasibleError when the polytope is empty.
Polytope minimize_representation(const Polytope& p);

}  // namespace drt
