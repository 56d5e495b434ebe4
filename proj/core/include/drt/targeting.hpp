#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "drt/mpqp.hpp"

namespace drt {

// Demand-response request: pull the average price toward lambda_star by
// adjusting load at no more than K nodes.
struct TargetingSpec {
  double lambda_star = 0.0;
  int K = 0;               // node budget; zero means hands off
  Eigen::VectorXd w;       // per-node curtailment penalty (>= 0)
  Eigen::VectorXd xbar;    // per-node cap on |x_i| (>= 0)
  Eigen::VectorXd base;    // load to start from, full nodal vector
};

struct TargetingOptions {
  bool screen = true;           // relaxation bounds before any MIQP
  bool include_weights = true;  // w'x term in the curtailment objective
  std::uint64_t seed = 0;
  QpOptions qp;
};

struct RegionOutcome {
  int region = -1;
  bool relax_feasible = false;
  double relax_bound = 0.0;  // certified lower bound on the region MIQP
  bool screened = false;     // skipped: bound could not beat the incumbent
  bool miqp_solved = false;
  double miqp_value = 0.0;   // valid when miqp_solved and feasible
  bool miqp_feasible = false;
  int bnb_nodes = 0;
};

struct TargetingPlan {
  bool feasible = false;
  int region = -1;            // winning region index within the policy
  Eigen::VectorXd x;          // per-node adjustment (curtail or shift)
  std::vector<int> selected;  // nodes granted a DR contract (v = 1)
  double objective = 0.0;
  Eigen::VectorXd load_after;
  Eigen::VectorXd lmp_after;
  double avg_lmp_before = 0.0;
  double avg_lmp_after = 0.0;
  int miqps_solved = 0;
  int regions_screened = 0;
  long bnb_nodes = 0;
  double wall_ms = 0.0;  // measured here, reported on stderr only
  std::vector<RegionOutcome> outcomes;
};

// Pick at most K nodes and curtailment amounts 0 <= x <= xbar so that the
// adjusted load lands where the average LMP is closest to the target.  One
// mixed-binary QP per critical region, best value wins; with screening on,
// regions whose relaxation bound cannot beat the incumbent are skipped.
TargetingPlan solve_targeting(const Policy& policy, const TargetingSpec& spec,
                              const TargetingOptions& opt = {});

// Same search over budget-limited load shifts: |x_i| <= xbar_i * v_i with
// 1'x = 0, no penalty term (shifted energy is conserved, not shed).
TargetingPlan solve_shifting(const Policy& policy, const TargetingSpec& spec,
                             const TargetingOptions& opt = {});

// Ground truth by brute force: every node subset of size <= K, one convex QP
// per (subset, region) pair.  Guarded against combinatorial blowup.
TargetingPlan oracle_targeting(const Policy& policy, const TargetingSpec& spec,
                               const TargetingOptions& opt = {});

// What an operator without the policy would do: curtail the K highest-price
// nodes at full cap and see where that lands.
TargetingPlan heuristic_targeting(const Policy& policy,
                                  const TargetingSpec& spec,
                                  const TargetingOptions& opt = {});

// Gaussian load scenarios around the base case, clipped to the admissible
// box; pinned nodes stay pinned.  Deterministic in (seed, count, sigma).
std::vector<Eigen::VectorXd> perturb_scenarios(const NetworkCase& net,
                                               int count, double sigma,
                                               std::uint64_t seed);

}  // namespace drt
