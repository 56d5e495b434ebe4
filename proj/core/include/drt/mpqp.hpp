#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drt/polytope.hpp"
#include "drt/sced.hpp"

namespace drt {

// The exploration works in reduced coordinates z: only nodes whose load box
// has positive width are free parameters, the rest are pinned at their fixed
// value.  This keeps critical regions full-dimensional.
struct ParameterSpace {
  int n_nodes = 0;
  std::vector<int> free_nodes;  // ascending node indices with lo < hi
  Eigen::VectorXd fixed_load;   // full length; entries at free nodes unused

  int dim() const { return static_cast<int>(free_nodes.size()); }
  Eigen::VectorXd lift(const Eigen::VectorXd& z) const;
  Eigen::VectorXd project(const Eigen::VectorXd& load) const;
};

ParameterSpace make_parameter_space(const NetworkCase& net);

// The admissible load box, expressed over the free coordinates.
Polytope domain_box(const NetworkCase& net, const ParameterSpace& ps);

// Jacobians of the dispatch primal/dual solution w.r.t. nodal load, obtained
// by differentiating the KKT system at a non-degenerate point.  Throws
// NumericsError when the point is degenerate (some constraint is active with
// a vanishing multiplier, which makes the KKT Jacobian singular).
struct Sensitivity {
  Eigen::MatrixXd gen;       // N x N, d generation / d load
  Eigen::RowVectorXd gamma;  // 1 x N, d gamma / d load (price convention)
  Eigen::MatrixXd mu;        // 2L x N, stacked line duals
  Eigen::MatrixXd psi;       // 2N x N, stacked capacity duals
};
Sensitivity compute_sensitivity(const ScedQp& sced, const Eigen::VectorXd& load,
                                const DispatchResult& dr);

// One critical region: on it, every dispatch quantity is affine in the load.
struct AffinePiece {
  Eigen::VectorXd base_load;  // expansion point, full length
  Eigen::VectorXd gen0;
  Eigen::MatrixXd gen_jac;
  double gamma0 = 0.0;
  Eigen::RowVectorXd gamma_jac;
  Eigen::VectorXd mu0;   // stacked 2L at base_load
  Eigen::MatrixXd mu_jac;
  Eigen::VectorXd psi0;  // stacked 2N
  Eigen::MatrixXd psi_jac;
  Eigen::MatrixXd F;     // lmp(l) = F l + g, full nodal coordinates
  Eigen::VectorXd g;
  std::vector<int> active_set;  // stacked inequality rows defining the piece

  Eigen::VectorXd lmp_at(const Eigen::VectorXd& load) const;
  Eigen::VectorXd generation_at(const Eigen::VectorXd& load) const;
};

struct CriticalRegion {
  AffinePiece piece;
  Polytope region;  // free coordinates, includes the domain box rows
};

// Piece + region around one non-degenerate dispatch point.  The region is
// cut by the inactive primal rows, nonnegativity of the active multipliers,
// and the domain box, then stripped of redundant rows.
CriticalRegion build_region(const ScedQp& sced, const ParameterSpace& ps,
                            const NetworkCase& net, const Eigen::VectorXd& load,
                            const DispatchResult& dr);

// A load inside `within` (free coordinates) whose dispatch is feasible, found
// by a joint feasibility QP over (generation, z).  nullopt when the whole
// piece admits no dispatchable load.
std::optional<Eigen::VectorXd> find_feasible_load(const ScedQp& sced,
                                                  const ParameterSpace& ps,
                                                  const Polytope& within);

// Subdivide `base \ region` into polytopes with pairwise disjoint interiors
// (one per region row, progressively constrained).  Empty slivers are
// dropped.
std::vector<Polytope> partition_complement(const Polytope& base,
                                           const Polytope& region);

struct PolicyBuildOptions {
  std::uint64_t seed = 0;
  double min_radius = 1e-7;   // slivers below this inscribed radius are noise
  int max_iterations = 10000; // frontier pops before giving up
  int max_regions = 2000;
  int perturb_retries = 5;
  double perturb_scale = 1e-6;
  bool unify = true;
  int sample_checks = 64;     // per merge candidate
  QpOptions qp;
};

struct Policy {
  ParameterSpace space;
  Polytope domain;
  std::vector<CriticalRegion> regions;
  std::vector<std::string> notes;  // degenerate seeds, dropped slivers, ...
};

// Explore the whole admissible box: grow a region at a seed, subtract it from
// every frontier piece, repeat until the frontier is exhausted.
Policy build_policy(const ScedQp& sced, const NetworkCase& net,
                    const PolicyBuildOptions& opt = {});

// Merge regions that share the same affine maps when their union is convex.
// Convexity is certified with cut-pair LPs and double-checked by sampling.
void unify_regions(Policy& policy, const PolicyBuildOptions& opt = {});

struct PolicyEval {
  bool inside = false;
  int region = -1;
  Eigen::VectorXd lmp;
  Eigen::VectorXd generation;
};

// Look the load up in the stored partition (first region that contains it)
// and read prices/dispatch off the affine maps.  No QP is solved.
PolicyEval evaluate(const Policy& policy, const Eigen::VectorXd& load,
                    double tol = 1e-9);

}  // namespace drt
