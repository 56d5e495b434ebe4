#include "drt/polytope.hpp"

#include <cmath>
#include <vector>

#include "drt/errors.hpp"
#include "drt/lp.hpp"

namespace drt {
namespace {

constexpr double kZeroRowTol = 1e-13;
constexpr double kFeasTol = 1e-9;
constexpr double kBoxCap = 1e7;  // center-search box for unbounded polytopes

}  // namespace

ChebyshevResult chebyshev_center(const Polytope& p) {
  ChebyshevResult out;
  const int d = p.dim();
  if (p.R.rows() != p.r.size()) {
    throw NumericsError("chebyshev_center: R and r row counts differ");
  }

  // Rows with a zero normal are either vacuous or flatly impossible.
  std::vector<int> live;
  live.reserve(p.rows());
  for (int i = 0; i < p.rows(); ++i) {
    const double nrm = p.R.row(i).norm();
    if (nrm <= kZeroRowTol) {
      if (p.r(i) < -kFeasTol) return out;  // 0 <= r_i fails outright
      continue;
    }
    live.push_back(i);
  }

  // LP over y = (z, rho): maximize rho subject to R_i z + |R_i| rho <= r_i
  // plus the box |z_j| <= kBoxCap that keeps the LP bounded.
  const int m = static_cast<int>(live.size());
  Eigen::MatrixXd A(m + 2 * d, d + 1);
  Eigen::VectorXd b(m + 2 * d);
  for (int k = 0; k < m; ++k) {
    const int i = live[k];
    const double nrm = p.R.row(i).norm();
    A.row(k).head(d) = p.R.row(i) / nrm;
    A(k, d) = 1.0;
    b(k) = p.r(i) / nrm;
  }
  for (int j = 0; j < d; ++j) {
    A.row(m + 2 * j).setZero();
    A(m + 2 * j, j) = 1.0;
    b(m + 2 * j) = kBoxCap;
    A.row(m + 2 * j + 1).setZero();
    A(m + 2 * j + 1, j) = -1.0;
    b(m + 2 * j + 1) = kBoxCap;
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(d + 1);
  c(d) = 1.0;

  const LpResult lp = solve_lp_max(c, A, b);
  if (lp.status != LpStatus::Optimal) {
    // The ball LP is always feasible (rho can go negative) and the box keeps
    // it bounded, so anything else is a solver breakdown.
    throw NumericsError("chebyshev_center: ball LP did not solve");
  }
  out.radius = lp.value;
  out.center = lp.x.head(d);
  out.feasible = out.radius >= -kFeasTol;
  return out;
}

FeasibilityWitness lp_feasible(const Polytope& p) {
  FeasibilityWitness w;
  if (p.rows() == 0) {
    w.feasible = true;
    w.point = Eigen::VectorXd::Zero(p.dim());
    return w;
  }
  const ChebyshevResult c = chebyshev_center(p);
  w.feasible = c.feasible;
  if (c.feasible) w.point = c.center;
  return w;
}

bool contains(const Polytope& p, const Eigen::VectorXd& z, double tol) {
  if (z.size() != p.dim()) {
    throw NumericsError("contains: point dimension mismatch");
  }
  if (p.rows() == 0) return true;
  return ((p.R * z - p.r).maxCoeff() <= tol);
}

Polytope intersect(const Polytope& a, const Polytope& b) {
  if (a.dim() != b.dim() && a.rows() > 0 && b.rows() > 0) {
    throw NumericsError("intersect: dimension mismatch");
  }
  Polytope out;
  out.tag = a.tag;
  const int d = a.rows() > 0 ? a.dim() : b.dim();
  out.R.resize(a.rows() + b.rows(), d);
  out.r.resize(a.rows() + b.rows());
  if (a.rows() > 0) {
    out.R.topRows(a.rows()) = a.R;
    out.r.head(a.rows()) = a.r;
  }
  if (b.rows() > 0) {
    out.R.bottomRows(b.rows()) = b.R;
    out.r.tail(b.rows()) = b.r;
  }
  return out;
}

Polytope minimize_representation(const Polytope& p) {
  if (!chebyshev_center(p).feasible) {
    throw InfeasibleError("minimize_representation: empty polytope");
  }
  const int d = p.dim();

  std::vector<int> keep;
  for (int i = 0; i < p.rows(); ++i) {
    if (p.R.row(i).norm() > kZeroRowTol) keep.push_back(i);
  }

  // Test each surviving row against the others.  Relaxing the tested row by
  // one unit (instead of deleting it) keeps the LP bounded even when the
  // polytope itself is unbounded in that direction.
  for (size_t t = 0; t < keep.size();) {
    const int i = keep[t];
    const int m = static_cast<int>(keep.size());
    Eigen::MatrixXd A(m, d);
    Eigen::VectorXd b(m);
    for (int k = 0; k < m; ++k) {
      A.row(k) = p.R.row(keep[k]);
      b(k) = p.r(keep[k]);
    }
    b(t) += 1.0;
    const LpResult lp = solve_lp_max(Eigen::VectorXd(p.R.row(i)), A, b);
    if (lp.status != LpStatus::Optimal) {
      throw NumericsError("minimize_representation: row test LP failed");
    }
    if (lp.value <= p.r(i) + kFeasTol) {
      keep.erase(keep.begin() + static_cast<long>(t));  // redundant
    } else {
      ++t;
    }
  }

  Polytope out;
  out.tag = p.tag;
  out.R.resize(static_cast<int>(keep.size()), d);
  out.r.resize(static_cast<int>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    out.R.row(static_cast<int>(k)) = p.R.row(keep[k]);
    out.r(static_cast<int>(k)) = p.r(keep[k]);
  }
  return out;
}

}  // namespace drt
