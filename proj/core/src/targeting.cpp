#include "drt/targeting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include "drt/errors.hpp"

namespace drt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPruneTol = 1e-12;
constexpr double kIntegralTol = 1e-6;
constexpr int kBnbNodeCap = 200000;

enum class Mode { Curtail, Shift };

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Request context shared by every per-region solve.
struct Ctx {
  const Policy* policy = nullptr;
  const TargetingSpec* spec = nullptr;
  Mode mode = Mode::Curtail;
  bool weights = true;
  QpOptions qp;
  Eigen::VectorXd z0;             // base load in free coordinates
  std::vector<int> cand;          // nodes allowed to move
  std::vector<int> cand_coord;    // their position among the free coords
  Eigen::VectorXd xbar, w;        // per candidate
  int K = 0;
};

// Affine objective data of one region: sum of LMPs after the adjustment is
// c0 + sgn * u'x, squared against the target.
struct RegionObjective {
  Eigen::VectorXd u;
  double c0 = 0.0;
  double sgn = -1.0;  // -1 curtail, +1 shift
};

RegionObjective region_objective(const Ctx& c, const CriticalRegion& cr) {
  const int n = c.policy->space.n_nodes;
  const Eigen::VectorXd colsum = cr.piece.F.colwise().sum().transpose();
  RegionObjective ro;
  ro.sgn = c.mode == Mode::Curtail ? -1.0 : 1.0;
  ro.u.resize(c.cand.size());
  for (size_t j = 0; j < c.cand.size(); ++j) ro.u(j) = colsum(c.cand[j]);
  ro.c0 = colsum.dot(c.spec->base) + cr.piece.g.sum() -
          n * c.spec->lambda_star;
  return ro;
}

double exact_objective(const Ctx& c, const RegionObjective& ro,
                       const Eigen::VectorXd& x) {
  const double resid = ro.c0 + ro.sgn * ro.u.dot(x);
  double obj = resid * resid;
  if (c.weights) obj += c.w.dot(x);
  return obj;
}

struct RegionQpResult {
  bool feasible = false;
  double bound = kInf;     // certified lower bound on the exact objective
  Eigen::VectorXd x;       // per candidate
  Eigen::VectorXd v;       // per candidate, pinned entries echoed back
};

// Convex piece of the search: x (and optionally box-relaxed v) inside one
// region.  vstate: -1 leaves v_j as a variable in [0,1], 0/1 pins it.
RegionQpResult region_qp(const Ctx& c, const CriticalRegion& cr,
                         const RegionObjective& ro,
                         const std::vector<int>& vstate, bool with_v) {
  const int nc = static_cast<int>(c.cand.size());
  const int ones =
      static_cast<int>(std::count(vstate.begin(), vstate.end(), 1));
  RegionQpResult out;
  if (ones > c.K) return out;

  std::vector<int> vvar;  // candidate index of each v variable
  if (with_v) {
    for (int j = 0; j < nc; ++j) {
      if (vstate[j] < 0) vvar.push_back(j);
    }
  }
  const int t = static_cast<int>(vvar.size());
  const int ny = nc + t;

  QpProblem p;
  p.Q = Eigen::MatrixXd::Zero(ny, ny);
  p.Q.topLeftCorner(nc, nc) = 2.0 * ro.u * ro.u.transpose();
  const double eps = 1e-11 * std::max(1.0, 2.0 * ro.u.squaredNorm());
  p.Q += eps * Eigen::MatrixXd::Identity(ny, ny);
  p.q = Eigen::VectorXd::Zero(ny);
  p.q.head(nc) = 2.0 * ro.c0 * ro.sgn * ro.u;
  if (c.weights) p.q.head(nc) += c.w;

  const Polytope& R = cr.region;
  const int mr = R.rows();
  const int rows = mr + 2 * nc + 2 * t + (t > 0 ? 1 : 0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, ny);
  Eigen::VectorXd b(rows);
  int at = 0;

  // Region rows over z = z0 + sgn * E x.
  for (int i = 0; i < mr; ++i) {
    for (int j = 0; j < nc; ++j) {
      A(at, j) = ro.sgn * R.R(i, c.cand_coord[j]);
    }
    b(at) = R.r(i) - R.R.row(i).dot(c.z0);
    ++at;
  }

  auto vcol = [&](int j) {  // column of v_j, or -1 when pinned
    const auto it = std::find(vvar.begin(), vvar.end(), j);
    return it == vvar.end() ? -1
                            : nc + static_cast<int>(it - vvar.begin());
  };

  for (int j = 0; j < nc; ++j) {
    const double cap = vstate[j] == 0 ? 0.0 : c.xbar(j);
    const int vc = with_v && vstate[j] < 0 ? vcol(j) : -1;
    if (c.mode == Mode::Curtail) {
      A(at, j) = -1.0;  // x_j >= 0
      b(at) = 0.0;
      ++at;
      A(at, j) = 1.0;  // x_j <= cap (or coupled to v_j)
      if (vc >= 0) {
        A(at, vc) = -c.xbar(j);
        b(at) = 0.0;
      } else {
        b(at) = cap;
      }
      ++at;
    } else {
      // |x_j| <= cap, two rows
      A(at, j) = 1.0;
      A(at + 1, j) = -1.0;
      if (vc >= 0) {
        A(at, vc) = -c.xbar(j);
        A(at + 1, vc) = -c.xbar(j);
        b(at) = 0.0;
        b(at + 1) = 0.0;
      } else {
        b(at) = cap;
        b(at + 1) = cap;
      }
      at += 2;
    }
  }
  for (int k = 0; k < t; ++k) {
    A(at, nc + k) = 1.0;
    b(at) = 1.0;
    ++at;
    A(at, nc + k) = -1.0;
    b(at) = 0.0;
    ++at;
  }
  if (t > 0) {
    for (int k = 0; k < t; ++k) A(at, nc + k) = 1.0;
    b(at) = static_cast<double>(c.K - ones);
    ++at;
  }
  p.A = A.topRows(at);
  p.b = b.head(at);

  if (c.mode == Mode::Shift) {
    p.has_eq = true;
    p.e = Eigen::VectorXd::Zero(ny);
    p.e.head(nc).setOnes();
    p.e_rhs = 0.0;
  }

  QpSolution qs;
  try {
    qs = solve_qp(p, c.qp);
  } catch (const InfeasibleError&) {
    return out;
  }

  out.feasible = true;
  out.x = qs.x.head(nc);
  out.v.resize(nc);
  for (int j = 0; j < nc; ++j) {
    out.v(j) = vstate[j] >= 0 ? static_cast<double>(vstate[j]) : 0.0;
  }
  for (int k = 0; k < t; ++k) out.v(vvar[k]) = qs.x(nc + k);
  // Certified bound: the regularized optimum under-shoots the true optimum
  // by at most eps/2 times the squared norm of any optimizer.
  const double c_safe = c.xbar.squaredNorm() + static_cast<double>(t);
  out.bound =
      qs.objective + ro.c0 * ro.c0 - 0.5 * eps * c_safe - kPruneTol;
  return out;
}

struct PolishResult {
  bool feasible = false;
  double value = kInf;
  Eigen::VectorXd x;
};

// Exact objective for a fully pinned v: solve the x-only QP, then evaluate
// the true (unregularized) objective at its solution.
PolishResult polish(const Ctx& c, const CriticalRegion& cr,
                    const RegionObjective& ro, const std::vector<int>& vstate) {
  PolishResult pr;
  const RegionQpResult r = region_qp(c, cr, ro, vstate, /*with_v=*/false);
  if (!r.feasible) return pr;
  pr.feasible = true;
  Eigen::VectorXd x = r.x;
  if (c.mode == Mode::Curtail) x = x.cwiseMax(0.0);  // shave QP roundoff
  for (int j = 0; j < x.size(); ++j) {
    if (std::abs(x(j)) < 1e-12) x(j) = 0.0;
  }
  pr.x = x;
  pr.value = exact_objective(c, ro, x);
  return pr;
}

struct BnbResult {
  bool feasible = false;
  double value = kInf;
  Eigen::VectorXd x;
  std::vector<int> vstate;
  int nodes = 0;
};

struct BnbNode {
  double bound;
  long id;
  std::vector<int> vstate;
  Eigen::VectorXd vrelax;
};
struct BnbOrder {
  bool operator()(const BnbNode& a, const BnbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  }
};

// Best-bound branch and bound on the binary selector v.
BnbResult region_miqp(const Ctx& c, const CriticalRegion& cr,
                      const RegionObjective& ro, double cutoff) {
  const int nc = static_cast<int>(c.cand.size());
  BnbResult best;

  std::priority_queue<BnbNode, std::vector<BnbNode>, BnbOrder> pq;
  long next_id = 0;

  auto push_node = [&](std::vector<int> vstate) {
    const RegionQpResult r = region_qp(c, cr, ro, vstate, /*with_v=*/true);
    ++best.nodes;
    if (!r.feasible) return;
    if (r.bound >= std::min(best.value, cutoff) - kPruneTol) return;
    BnbNode n;
    n.bound = r.bound;
    n.id = next_id++;
    n.vstate = std::move(vstate);
    n.vrelax = r.v;
    pq.push(std::move(n));
  };

  push_node(std::vector<int>(nc, -1));
  while (!pq.empty()) {
    if (best.nodes > kBnbNodeCap) {
      throw NumericsError("region_miqp: node budget exceeded");
    }
    BnbNode n = pq.top();
    pq.pop();
    if (n.bound >= std::min(best.value, cutoff) - kPruneTol) break;

    // Most fractional free selector; lowest index on ties.
    int branch = -1;
    double frac = kIntegralTol;
    for (int j = 0; j < nc; ++j) {
      if (n.vstate[j] >= 0) continue;
      const double f = std::min(n.vrelax(j), 1.0 - n.vrelax(j));
      if (f > frac + 1e-15) {
        frac = f;
        branch = j;
      }
    }
    if (branch < 0) {
      // Integral: pin the rounded pattern and price it exactly.
      std::vector<int> rounded = n.vstate;
      for (int j = 0; j < nc; ++j) {
        if (rounded[j] < 0) rounded[j] = n.vrelax(j) >= 0.5 ? 1 : 0;
      }
      const PolishResult pr = polish(c, cr, ro, rounded);
      if (pr.feasible && pr.value < best.value) {
        best.feasible = true;
        best.value = pr.value;
        best.x = pr.x;
        best.vstate = rounded;
      }
      continue;
    }
    for (int val : {1, 0}) {
      std::vector<int> child = n.vstate;
      child[branch] = val;
      push_node(std::move(child));
    }
  }
  return best;
}

Ctx make_ctx(const Policy& policy, const TargetingSpec& spec,
             const TargetingOptions& opt, Mode mode) {
  // Shifted energy is conserved, not shed, so the shift objective carries no
  // curtailment penalty regardless of the option.
  const int n = policy.space.n_nodes;
  if (spec.base.size() != n) {
    throw ValidationError("targeting: base load length mismatch");
  }
  if (spec.w.size() != n || spec.xbar.size() != n) {
    throw ValidationError("targeting: w and xbar must cover every node");
  }
  if (spec.K < 0) throw ValidationError("targeting: K must be nonnegative");
  if (spec.w.minCoeff() < 0.0) {
    throw ValidationError("targeting: weights must be nonnegative");
  }
  if (spec.xbar.minCoeff() < 0.0) {
    throw ValidationError("targeting: xbar must be nonnegative");
  }
  for (int i = 0; i < n; ++i) {
    // Loads cannot go negative, so no node may offer more than it consumes.
    if (spec.xbar(i) > spec.base(i) + 1e-9) {
      throw ValidationError("targeting: xbar exceeds the base load at node " +
                            std::to_string(i));
    }
  }

  Ctx c;
  c.policy = &policy;
  c.spec = &spec;
  c.mode = mode;
  c.weights = mode == Mode::Curtail && opt.include_weights;
  c.qp = opt.qp;
  c.K = spec.K;
  c.z0 = policy.space.project(spec.base);
  for (int k = 0; k < policy.space.dim(); ++k) {
    const int node = policy.space.free_nodes[k];
    if (spec.xbar(node) > 0.0) {
      c.cand.push_back(node);
      c.cand_coord.push_back(k);
    }
  }
  c.xbar.resize(c.cand.size());
  c.w.resize(c.cand.size());
  for (size_t j = 0; j < c.cand.size(); ++j) {
    c.xbar(static_cast<int>(j)) = spec.xbar(c.cand[j]);
    c.w(static_cast<int>(j)) = spec.w(c.cand[j]);
  }
  return c;
}

Eigen::VectorXd embed(const Ctx& c, const Eigen::VectorXd& x_cand) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(c.policy->space.n_nodes);
  for (size_t j = 0; j < c.cand.size(); ++j) {
    x(c.cand[j]) = x_cand(static_cast<int>(j));
  }
  return x;
}

void finish_plan(const Ctx& c, TargetingPlan& plan,
                 const Eigen::VectorXd& lmp_before) {
  const int n = c.policy->space.n_nodes;
  plan.avg_lmp_before = lmp_before.sum() / n;
  if (!plan.feasible) return;
  plan.load_after = c.spec->base + (c.mode == Mode::Curtail ? -1.0 : 1.0) *
                                       plan.x;
  // Price the result with the winning region's own map: on a shared face the
  // first-match rule of evaluate() could pick the neighbour instead.
  plan.lmp_after =
      c.policy->regions[plan.region].piece.lmp_at(plan.load_after);
  plan.avg_lmp_after = plan.lmp_after.sum() / n;
  plan.selected.clear();
  for (int i = 0; i < n; ++i) {
    if (std::abs(plan.x(i)) > 1e-9) plan.selected.push_back(i);
  }
}

TargetingPlan solve_impl(const Policy& policy, const TargetingSpec& spec,
                         const TargetingOptions& opt, Mode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  Ctx c = make_ctx(policy, spec, opt, mode);

  const PolicyEval base_ev = evaluate(policy, spec.base, 1e-7);
  if (!base_ev.inside) {
    throw InfeasibleError("targeting: base load is outside the policy domain");
  }

  TargetingPlan plan;
  plan.x = Eigen::VectorXd::Zero(policy.space.n_nodes);
  const int nr = static_cast<int>(policy.regions.size());
  plan.outcomes.resize(nr);

  std::vector<RegionObjective> ros;
  ros.reserve(nr);
  for (int k = 0; k < nr; ++k) {
    ros.push_back(region_objective(c, policy.regions[k]));
    plan.outcomes[k].region = k;
  }

  if (c.cand.empty()) {
    // Nothing is allowed to move.  Staying put is only an answer when the
    // caller asked for no adjustment (K = 0) or the target is already met.
    const double resid = ros[base_ev.region].c0;
    if (c.K > 0 && std::abs(resid) > 1e-9) {
      throw InfeasibleError(
          "DR infeasible: no load may move and the target is not met");
    }
    plan.feasible = true;
    plan.region = base_ev.region;
    plan.objective = resid * resid;
    finish_plan(c, plan, base_ev.lmp);
    plan.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    return plan;
  }

  double best = kInf;
  int best_region = -1;
  Eigen::VectorXd best_x;

  auto run_miqp = [&](int k, double cutoff) {
    RegionOutcome& oc = plan.outcomes[k];
    const BnbResult res = region_miqp(c, policy.regions[k], ros[k], cutoff);
    oc.miqp_solved = true;
    oc.miqp_feasible = res.feasible;
    oc.bnb_nodes = res.nodes;
    plan.bnb_nodes += res.nodes;
    ++plan.miqps_solved;
    if (res.feasible) {
      oc.miqp_value = res.value;
      if (res.value < best) {
        best = res.value;
        best_region = k;
        best_x = res.x;
      }
    }
  };

  if (opt.screen) {
    // Cheap bounds first, then MIQPs in bound order until the rest cannot
    // possibly win.
    const std::vector<int> all_v(c.cand.size(), -1);
    for (int k = 0; k < nr; ++k) {
      const RegionQpResult r =
          region_qp(c, policy.regions[k], ros[k], all_v, /*with_v=*/false);
      plan.outcomes[k].relax_feasible = r.feasible;
      plan.outcomes[k].relax_bound = r.feasible ? r.bound : kInf;
    }
    std::vector<int> order;
    for (int k = 0; k < nr; ++k) {
      if (plan.outcomes[k].relax_feasible) order.push_back(k);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (plan.outcomes[a].relax_bound != plan.outcomes[b].relax_bound) {
        return plan.outcomes[a].relax_bound < plan.outcomes[b].relax_bound;
      }
      return a < b;
    });
    for (int k : order) {
      if (plan.outcomes[k].relax_bound >= best - kPruneTol) {
        plan.outcomes[k].screened = true;
        ++plan.regions_screened;
        continue;
      }
      run_miqp(k, best);
    }
  } else {
    for (int k = 0; k < nr; ++k) run_miqp(k, kInf);
  }

  if (best_region >= 0) {
    plan.feasible = true;
    plan.region = best_region;
    plan.objective = best;
    plan.x = embed(c, best_x);
  }
  finish_plan(c, plan, base_ev.lmp);
  plan.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return plan;
}

}  // namespace

TargetingPlan solve_targeting(const Policy& policy, const TargetingSpec& spec,
                              const TargetingOptions& opt) {
  return solve_impl(policy, spec, opt, Mode::Curtail);
}

TargetingPlan solve_shifting(const Policy& policy, const TargetingSpec& spec,
                             const TargetingOptions& opt) {
  return solve_impl(policy, spec, opt, Mode::Shift);
}

TargetingPlan oracle_targeting(const Policy& policy, const TargetingSpec& spec,
                               const TargetingOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Ctx c = make_ctx(policy, spec, opt, Mode::Curtail);
  const PolicyEval base_ev = evaluate(policy, spec.base, 1e-7);
  if (!base_ev.inside) {
    throw InfeasibleError("targeting: base load is outside the policy domain");
  }

  const int nc = static_cast<int>(c.cand.size());
  const int kk = std::min(c.K, nc);
  double combos = 0.0;
  {
    double binom = 1.0;
    for (int j = 0; j <= kk; ++j) {
      combos += binom;
      binom = binom * (nc - j) / (j + 1);
    }
  }
  if (combos > 4096.0) {
    throw ValidationError("oracle_targeting: instance too large to enumerate");
  }

  TargetingPlan plan;
  plan.x = Eigen::VectorXd::Zero(policy.space.n_nodes);
  plan.outcomes.resize(policy.regions.size());
  for (size_t k = 0; k < policy.regions.size(); ++k) {
    plan.outcomes[k].region = static_cast<int>(k);
  }

  std::vector<RegionObjective> ros;
  for (const CriticalRegion& cr : policy.regions) {
    ros.push_back(region_objective(c, cr));
  }

  double best = kInf;
  int best_region = -1;
  Eigen::VectorXd best_x;

  // All candidate subsets of size <= K, smallest first, lexicographic.
  for (int size = 0; size <= kk; ++size) {
    std::vector<int> pick(size);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      std::vector<int> vstate(nc, 0);
      for (int j : pick) vstate[j] = 1;
      for (size_t k = 0; k < policy.regions.size(); ++k) {
        const PolishResult pr =
            polish(c, policy.regions[k], ros[k], vstate);
        ++plan.miqps_solved;  // counts convex solves here
        if (pr.feasible && pr.value < best) {
          best = pr.value;
          best_region = static_cast<int>(k);
          best_x = pr.x;
        }
      }
      // next combination
      int i = size - 1;
      while (i >= 0 && pick[i] == nc - size + i) --i;
      if (i < 0) break;
      ++pick[i];
      for (int j = i + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }

  if (best_region >= 0) {
    plan.feasible = true;
    plan.region = best_region;
    plan.objective = best;
    plan.x = embed(c, best_x);
  }
  finish_plan(c, plan, base_ev.lmp);
  plan.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return plan;
}

TargetingPlan heuristic_targeting(const Policy& policy,
                                  const TargetingSpec& spec,
                                  const TargetingOptions& opt) {
  Ctx c = make_ctx(policy, spec, opt, Mode::Curtail);
  const PolicyEval base_ev = evaluate(policy, spec.base, 1e-7);
  if (!base_ev.inside) {
    throw InfeasibleError("targeting: base load is outside the policy domain");
  }

  // Domain floor per free coordinate, recovered from the box rows.
  const int d = policy.space.dim();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -kInf);
  for (int i = 0; i < policy.domain.rows(); ++i) {
    for (int k = 0; k < d; ++k) {
      if (policy.domain.R(i, k) < -0.5 &&
          policy.domain.R.row(i).cwiseAbs().sum() ==
              std::abs(policy.domain.R(i, k))) {
        lo(k) = std::max(lo(k), -policy.domain.r(i) / (-policy.domain.R(i, k)));
      }
    }
  }

  const int nc = static_cast<int>(c.cand.size());
  std::vector<int> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double la = base_ev.lmp(c.cand[a]), lb = base_ev.lmp(c.cand[b]);
    if (la != lb) return la > lb;
    return c.cand[a] < c.cand[b];
  });

  TargetingPlan plan;
  plan.x = Eigen::VectorXd::Zero(policy.space.n_nodes);
  Eigen::VectorXd x_cand = Eigen::VectorXd::Zero(nc);
  const int picks = std::min(c.K, nc);
  for (int s = 0; s < picks; ++s) {
    const int j = order[s];
    const double floor_k = lo(c.cand_coord[j]);
    const double room = c.spec->base(c.cand[j]) - floor_k;
    x_cand(j) = std::max(0.0, std::min(c.xbar(j), room));
  }
  plan.x = embed(c, x_cand);
  plan.load_after = spec.base - plan.x;

  const PolicyEval after = evaluate(policy, plan.load_after, 1e-7);
  plan.avg_lmp_before = base_ev.lmp.sum() / policy.space.n_nodes;
  if (after.inside) {
    plan.feasible = true;
    plan.region = after.region;
    plan.lmp_after = after.lmp;
    plan.avg_lmp_after = after.lmp.sum() / policy.space.n_nodes;
    const double resid =
        after.lmp.sum() - policy.space.n_nodes * spec.lambda_star;
    plan.objective = resid * resid;
    if (opt.include_weights) plan.objective += spec.w.dot(plan.x);
    for (int i = 0; i < plan.x.size(); ++i) {
      if (plan.x(i) > 1e-9) plan.selected.push_back(i);
    }
  } else {
    plan.feasible = false;
    plan.objective = kInf;
  }
  return plan;
}

std::vector<Eigen::VectorXd> perturb_scenarios(const NetworkCase& net,
                                               int count, double sigma,
                                               std::uint64_t seed) {
  if (count < 0) throw ValidationError("perturb_scenarios: negative count");
  if (sigma < 0.0) throw ValidationError("perturb_scenarios: negative sigma");
  const ParameterSpace ps = make_parameter_space(net);
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd l = net.base_load;
    for (int k : ps.free_nodes) {
      // Box-Muller, cosine branch only: one normal per two uniform draws,
      // identical on every platform.
      const double u1 = 1.0 - unit_draw(rng);
      const double u2 = unit_draw(rng);
      const double nrm =
          std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      l(k) = std::clamp(l(k) + sigma * nrm, net.box_lo(k), net.box_hi(k));
    }
    out.push_back(l);
  }
  return out;
}

}  // namespace drt
