#include "drt/lp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "drt/errors.hpp"

namespace drt {
namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;

// One pass of the primal simplex on an (m+1) x (n+1) tableau in canonical
// form: rows 0..m-1 are constraints with nonnegative right-hand sides in the
// last column, row m is the reduced-cost row for a minimization.  basis[i]
// names the column that is basic in row i.  Columns listed in `blocked` never
// enter (used to freeze artificial variables in phase two).
//
// Returns true on optimality, false if the problem is unbounded below.
bool run_simplex(Eigen::MatrixXd& tab, std::vector<int>& basis,
                 const std::vector<bool>& blocked) {
  const long m = tab.rows() - 1;
  const long n = tab.cols() - 1;
  // Bland's rule bounds the number of bases, but guard anyway.
  const long cap = std::min(5000000L, 2000L + 50L * (m + n) * (m + n));
  for (long it = 0; it < cap; ++it) {
    // Entering column: lowest index with negative reduced cost (Bland).
    long enter = -1;
    for (long j = 0; j < n; ++j) {
      if (!blocked[j] && tab(m, j) < -kReducedCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    // Leaving row: min-ratio, ties broken by smallest basic column index.
    long leave = -1;
    double best = 0.0;
    for (long i = 0; i < m; ++i) {
      if (tab(i, enter) > kPivotTol) {
        const double ratio = tab(i, n) / tab(i, enter);
        if (leave < 0 || ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) return false;

    tab.row(leave) /= tab(leave, enter);
    for (long i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = tab(i, enter);
      if (f != 0.0) tab.row(i) -= f * tab.row(leave);
    }
    basis[leave] = static_cast<int>(enter);
  }
  throw NumericsError("simplex: iteration cap exceeded");
}

}  // namespace

LpResult solve_lp_max(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  if (A.rows() != b.size() || (m > 0 && A.cols() != n)) {
    throw NumericsError("solve_lp_max: dimension mismatch");
  }

  LpResult out;
  if (m == 0) {
    // No constraints: bounded only for a zero objective.
    if (c.lpNorm<Eigen::Infinity>() > 0.0) {
      out.status = LpStatus::Unbounded;
      return out;
    }
    out.status = LpStatus::Optimal;
    out.x = Eigen::VectorXd::Zero(n);
    out.value = 0.0;
    return out;
  }

  // Standard form over u = [x+, x-, s, a] >= 0 with  sgn_i*(A x) + ... = |b|.
  // Rows with negative b are flipped; their slack then carries -1, so they
  // get an artificial variable instead.
  std::vector<int> art_col(m, -1);
  int n_art = 0;
  for (int i = 0; i < m; ++i) {
    if (b(i) < 0.0) ++n_art;
  }
  const int cols = 2 * n + m + n_art;
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  std::vector<int> basis(m, -1);
  int next_art = 2 * n + m;
  for (int i = 0; i < m; ++i) {
    const double sgn = b(i) < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      tab(i, j) = sgn * A(i, j);
      tab(i, n + j) = -sgn * A(i, j);
    }
    tab(i, 2 * n + i) = sgn;  // slack
    tab(i, cols) = sgn * b(i);
    if (sgn < 0.0) {
      art_col[i] = next_art;
      tab(i, art_col[i]) = 1.0;
      basis[i] = art_col[i];
    } else {
      basis[i] = 2 * n + i;
    }
  }

  std::vector<bool> blocked(cols, false);

  // Phase one: minimize the sum of artificials.
  if (n_art > 0) {
    for (int i = 0; i < m; ++i) {
      if (art_col[i] >= 0) tab(m, art_col[i]) = 1.0;
    }
    for (int i = 0; i < m; ++i) {
      if (art_col[i] >= 0) tab.row(m) -= tab.row(i);
    }
    run_simplex(tab, basis, blocked);  // sum of artificials is bounded below
    const double phase1 = -tab(m, cols);
    if (phase1 > 1e-7) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    // Drive any artificial still basic (at zero) out of the basis, or accept
    // it on a redundant row with its column frozen.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < 2 * n + m) continue;
      int piv = -1;
      for (int j = 0; j < 2 * n + m; ++j) {
        if (std::abs(tab(i, j)) > kPivotTol) {
          piv = j;
          break;
        }
      }
      if (piv >= 0) {
        tab.row(i) /= tab(i, piv);
        for (int k = 0; k <= m; ++k) {
          if (k == i) continue;
          const double f = tab(k, piv);
          if (f != 0.0) tab.row(k) -= f * tab.row(i);
        }
        basis[i] = piv;
      }
    }
    for (int j = 2 * n + m; j < cols; ++j) blocked[j] = true;
    tab.row(m).setZero();
  }

  // Phase two: minimize -c'x  (== maximize c'x).
  for (int j = 0; j < n; ++j) {
    tab(m, j) = -c(j);
    tab(m, n + j) = c(j);
  }
  for (int i = 0; i < m; ++i) {
    const double f = tab(m, basis[i]);
    if (f != 0.0) tab.row(m) -= f * tab.row(i);
  }
  if (!run_simplex(tab, basis, blocked)) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(cols);
  for (int i = 0; i < m; ++i) u(basis[i]) = tab(i, cols);
  out.status = LpStatus::Optimal;
  out.x = u.head(n) - u.segment(n, n);
  out.value = c.dot(out.x);
  return out;
}

LpResult solve_lp_min(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                      const Eigen::VectorXd& b) {
  LpResult r = solve_lp_max(Eigen::VectorXd(-c), A, b);
  r.value = -r.value;
  return r;
}

}  // namespace drt
