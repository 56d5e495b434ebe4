#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "drt/errors.hpp"
#include "drt/json_io.hpp"
#include "drt/mpqp.hpp"
#include "drt/network.hpp"
#include "drt/polytope.hpp"
#include "drt/sced.hpp"
#include "test_helpers.hpp"

using namespace drt;
using drt_test::fixture;
using drt_test::thrown;

namespace {

// [lo, hi] of a one-dimensional polytope.
std::pair<double, double> interval_of(const Polytope& p) {
  REQUIRE(p.dim() == 1);
  double lo = -1e300, hi = 1e300;
  for (int i = 0; i < p.rows(); ++i) {
    const double c = p.R(i, 0);
    if (c > 1e-12) hi = std::min(hi, p.r(i) / c);
    if (c < -1e-12) lo = std::max(lo, p.r(i) / c);
  }
  return {lo, hi};
}

Polytope box2(double x0, double x1, double y0, double y1) {
  Polytope p;
  p.R.resize(4, 2);
  p.r.resize(4);
  p.R << 1, 0, -1, 0, 0, 1, 0, -1;
  p.r << x1, -x0, y1, -y0;
  return p;
}

// A critical region over `box` whose maps are a constant offset; regions with
// equal offsets are mergeable, others are not.
CriticalRegion flat_region(const Polytope& box, double offset) {
  CriticalRegion cr;
  cr.region = box;
  cr.piece.base_load = Eigen::VectorXd::Zero(2);
  cr.piece.gen0 = Eigen::VectorXd::Constant(2, offset);
  cr.piece.gen_jac = Eigen::MatrixXd::Identity(2, 2);
  cr.piece.gamma0 = offset;
  cr.piece.gamma_jac = Eigen::RowVectorXd::Zero(2);
  cr.piece.F = Eigen::MatrixXd::Identity(2, 2);
  cr.piece.g = Eigen::VectorXd::Constant(2, offset);
  cr.piece.mu0 = Eigen::VectorXd::Zero(0);
  cr.piece.mu_jac = Eigen::MatrixXd::Zero(0, 2);
  cr.piece.psi0 = Eigen::VectorXd::Zero(4);
  cr.piece.psi_jac = Eigen::MatrixXd::Zero(4, 2);
  return cr;
}

}  // namespace

TEST_CASE("mpqp: parameter space keeps only nodes with box width") {
  const NetworkCase net = load_case(fixture("net5.json"));
  const ParameterSpace ps = make_parameter_space(net);
  CHECK(ps.n_nodes == 5);
  CHECK(ps.free_nodes == std::vector<int>{1, 3});
  CHECK(ps.dim() == 2);

  Eigen::VectorXd z(2);
  z << 1.5, 2.0;
  const Eigen::VectorXd full = ps.lift(z);
  REQUIRE(full.size() == 5);
  CHECK(full(1) == 1.5);
  CHECK(full(3) == 2.0);
  CHECK(full(0) == net.base_load(0));
  CHECK(full(2) == net.base_load(2));
  CHECK(full(4) == net.base_load(4));
  CHECK(drt_test::dist(ps.project(full), z) == 0.0);
}

TEST_CASE("mpqp: domain box interleaves upper and lower rows per coordinate") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ParameterSpace ps = make_parameter_space(net);
  REQUIRE(ps.free_nodes == std::vector<int>{1});
  const Polytope box = domain_box(net, ps);
  REQUIRE(box.rows() == 2);
  CHECK(box.R(0, 0) == 1.0);
  CHECK(box.r(0) == 11.0);
  CHECK(box.R(1, 0) == -1.0);
  CHECK(box.r(1) == 0.0);
  CHECK(box.tag == "domain");
}

TEST_CASE("mpqp: sensitivity matches finite differences of the dispatch") {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const DispatchResult d0 = dispatch(sq, net.base_load);
  const Sensitivity s = compute_sensitivity(sq, net.base_load, d0);

  const int N = net.n(), L = net.l();
  const double h = 1e-5;
  for (int j = 0; j < N; ++j) {
    Eigen::VectorXd up = net.base_load, dn = net.base_load;
    up(j) += h;
    dn(j) -= h;
    const DispatchResult du = dispatch(sq, up);
    const DispatchResult dd = dispatch(sq, dn);

    const Eigen::VectorXd fd_gen = (du.generation - dd.generation) / (2 * h);
    CHECK(drt_test::dist(Eigen::VectorXd(s.gen.col(j)), fd_gen) <= 1e-5);

    CHECK(std::abs(s.gamma(j) - (du.gamma - dd.gamma) / (2 * h)) <= 1e-5);

    Eigen::VectorXd mu_u(2 * L), mu_d(2 * L);
    mu_u << du.mu_upper, du.mu_lower;
    mu_d << dd.mu_upper, dd.mu_lower;
    CHECK(drt_test::dist(Eigen::VectorXd(s.mu.col(j)),
                         Eigen::VectorXd((mu_u - mu_d) / (2 * h))) <= 1e-5);

    Eigen::VectorXd psi_u(2 * N), psi_d(2 * N);
    psi_u << du.psi_upper, du.psi_lower;
    psi_d << dd.psi_upper, dd.psi_lower;
    CHECK(drt_test::dist(Eigen::VectorXd(s.psi.col(j)),
                         Eigen::VectorXd((psi_u - psi_d) / (2 * h))) <= 1e-5);
  }
}

TEST_CASE("mpqp: sensitivity rejects degenerate dispatch points") {
  // At l2 = 1 the cheap unit sits exactly at pmax with a vanishing
  // multiplier; the KKT Jacobian is singular there.
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  Eigen::VectorXd load(2);
  load << 0.0, 1.0;
  const DispatchResult d = dispatch(sq, load);
  CHECK(drt_test::has(
      thrown<NumericsError>([&] { compute_sensitivity(sq, load, d); }),
      "singular KKT Jacobian"));
}

TEST_CASE("mpqp: one-bus policy splits the box at the capacity breakpoint") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);
  REQUIRE(policy.regions.size() == 2);

  const auto [lo0, hi0] = interval_of(policy.regions[0].region);
  const auto [lo1, hi1] = interval_of(policy.regions[1].region);
  CHECK(lo0 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(hi0 == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(lo1 == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(hi1 == doctest::Approx(11.0).epsilon(1e-9));

  // lmp slope w.r.t. the load at b2 is the marginal unit's quadratic
  // coefficient: a1 = 1 below the breakpoint, a2 = 1 above.
  CHECK(policy.regions[0].piece.F(1, 1) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(policy.regions[1].piece.F(1, 1) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(policy.regions[0].piece.g(1) ==
        doctest::Approx(0.0).epsilon(1e-7).scale(1.0));
  CHECK(policy.regions[1].piece.g(1) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(policy.regions[0].piece.active_set == std::vector<int>{5});
  CHECK(policy.regions[1].piece.active_set == std::vector<int>{2});
  CHECK(policy.regions[0].region.tag == "R0");
  CHECK(policy.regions[1].region.tag == "R1");
}

TEST_CASE("mpqp: evaluate reads prices off the stored pieces") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);

  Eigen::VectorXd load(2);
  load << 0.0, 0.5;
  const PolicyEval low = evaluate(policy, load);
  CHECK(low.inside);
  CHECK(low.region == 0);
  CHECK(low.lmp(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(low.lmp(1) == doctest::Approx(0.5).epsilon(1e-9));

  load << 0.0, 5.0;
  const PolicyEval high = evaluate(policy, load);
  CHECK(high.inside);
  CHECK(high.region == 1);
  CHECK(high.lmp(1) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(high.generation(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(high.generation(1) == doctest::Approx(4.0).epsilon(1e-9));

  load << 0.0, 12.0;
  const PolicyEval out = evaluate(policy, load);
  CHECK_FALSE(out.inside);
  CHECK(out.region == -1);

  const Eigen::VectorXd bad = Eigen::VectorXd::Zero(3);
  CHECK(drt_test::has(
      thrown<ValidationError>([&] { evaluate(policy, bad); }),
      "load length mismatch"));
}

TEST_CASE("mpqp: regions tile the box without overlapping interiors") {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);
  REQUIRE(policy.regions.size() >= 2);

  for (size_t i = 0; i < policy.regions.size(); ++i) {
    for (size_t j = i + 1; j < policy.regions.size(); ++j) {
      const Polytope both =
          intersect(policy.regions[i].region, policy.regions[j].region);
      const ChebyshevResult cheb = chebyshev_center(both);
      if (cheb.feasible) CHECK(cheb.radius <= 1e-7);
    }
  }
}

TEST_CASE("mpqp: generation is continuous across shared facets") {
  // Prices may jump between regions, but the primal dispatch cannot.
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);

  int facets = 0;
  for (size_t i = 0; i < policy.regions.size(); ++i) {
    for (size_t j = i + 1; j < policy.regions.size(); ++j) {
      const Polytope both =
          intersect(policy.regions[i].region, policy.regions[j].region);
      const FeasibilityWitness w = lp_feasible(both);
      if (!w.feasible) continue;
      ++facets;
      const Eigen::VectorXd load = policy.space.lift(w.point);
      const Eigen::VectorXd ga = policy.regions[i].piece.generation_at(load);
      const Eigen::VectorXd gb = policy.regions[j].piece.generation_at(load);
      CHECK(drt_test::dist(ga, gb) <= 1e-6);
    }
  }
  CHECK(facets >= 1);
}

TEST_CASE("mpqp: stored maps reproduce the dispatch inside each region") {
  for (const char* name : {"onebus.json", "ring3_congested.json"}) {
    CAPTURE(name);
    const NetworkCase net = load_case(fixture(name));
    const ScedQp sq = assemble(net);
    const Policy policy = build_policy(sq, net);
    for (const CriticalRegion& cr : policy.regions) {
      const ChebyshevResult cheb = chebyshev_center(cr.region);
      REQUIRE(cheb.feasible);
      const Eigen::VectorXd load = policy.space.lift(cheb.center);
      const DispatchResult d = dispatch(sq, load);
      CHECK(drt_test::dist(cr.piece.lmp_at(load), d.lmp) <= 1e-7);
      CHECK(drt_test::dist(cr.piece.generation_at(load), d.generation) <=
            1e-7);
    }
  }
}

TEST_CASE("mpqp: complement of a half-box is one piece") {
  const Polytope base = box2(0, 1, 0, 1);
  Polytope half;
  half.R.resize(1, 2);
  half.R << 1, 0;
  half.r.resize(1);
  half.r << 0.5;
  const std::vector<Polytope> parts = partition_complement(base, half);
  REQUIRE(parts.size() == 1);
  // The piece is the rectangle [0.5, 1] x [0, 1]: inscribed radius 1/4, the
  // ball centered anywhere on x = 3/4 (the y coordinate is not unique).
  const ChebyshevResult cheb = chebyshev_center(parts[0]);
  REQUIRE(cheb.feasible);
  CHECK(cheb.radius == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(cheb.center(0) == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(cheb.center(1) >= 0.25 - 1e-6);
  CHECK(cheb.center(1) <= 0.75 + 1e-6);
}

TEST_CASE("mpqp: complement pieces cover exactly and never overlap") {
  const Polytope base = box2(0, 1, 0, 1);
  const Polytope inner = box2(0.25, 0.75, 0.25, 0.75);
  const std::vector<Polytope> parts = partition_complement(base, inner);
  REQUIRE(parts.size() == 4);

  for (size_t i = 0; i < parts.size(); ++i) {
    for (size_t j = i + 1; j < parts.size(); ++j) {
      const ChebyshevResult cheb = chebyshev_center(intersect(parts[i],
                                                              parts[j]));
      if (cheb.feasible) CHECK(cheb.radius <= 1e-9);
    }
  }

  // Every grid point of the base box lies in the region or in exactly the
  // complement; strict interior points of the region are in no piece.
  for (double x = 0.05; x < 1.0; x += 0.1) {
    for (double y = 0.05; y < 1.0; y += 0.1) {
      Eigen::Vector2d p(x, y);
      int hits = 0;
      for (const Polytope& part : parts) {
        if (contains(part, p, 1e-9)) ++hits;
      }
      if (contains(inner, p, -1e-6)) {           // strictly inside the region
        CHECK(hits == 0);
      } else if (!contains(inner, p, 1e-9)) {    // strictly outside
        CHECK(hits >= 1);
      }
    }
  }
}

TEST_CASE("mpqp: complement of a covering region is empty") {
  const Polytope base = box2(0, 1, 0, 1);
  const Polytope cover = box2(-1, 2, -1, 2);
  CHECK(partition_complement(base, cover).empty());
}

TEST_CASE("mpqp: unify merges equal-map neighbours when the union is convex") {
  Policy policy;
  policy.regions.push_back(flat_region(box2(0, 1, 0, 1), 2.0));
  policy.regions.push_back(flat_region(box2(1, 2, 0, 1), 2.0));
  unify_regions(policy);
  REQUIRE(policy.regions.size() == 1);
  CHECK(policy.regions[0].region.tag == "R0");
  CHECK(contains(policy.regions[0].region, Eigen::Vector2d(0.5, 0.5), 1e-9));
  CHECK(contains(policy.regions[0].region, Eigen::Vector2d(1.5, 0.5), 1e-9));
  CHECK_FALSE(
      contains(policy.regions[0].region, Eigen::Vector2d(2.5, 0.5), 1e-9));

  // Idempotent: a second pass changes nothing.
  unify_regions(policy);
  CHECK(policy.regions.size() == 1);
}

TEST_CASE("mpqp: unify refuses non-convex unions and different maps") {
  Policy lshape;
  lshape.regions.push_back(flat_region(box2(0, 1, 0, 1), 2.0));
  lshape.regions.push_back(flat_region(box2(1, 2, 0, 0.5), 2.0));
  unify_regions(lshape);
  CHECK(lshape.regions.size() == 2);

  Policy maps;
  maps.regions.push_back(flat_region(box2(0, 1, 0, 1), 2.0));
  maps.regions.push_back(flat_region(box2(1, 2, 0, 1), 3.0));
  unify_regions(maps);
  CHECK(maps.regions.size() == 2);
}

TEST_CASE("mpqp: policy JSON round-trips byte for byte") {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);
  const std::string text = policy_to_json(net, policy);
  const LoadedPolicy loaded = policy_from_json_text(text);
  CHECK(loaded.hash == case_hash(net));
  CHECK(policy_to_json(loaded.net, loaded.policy) == text);

  // Lookups through the reloaded policy agree with the original.
  const PolicyEval a = evaluate(policy, net.base_load);
  const PolicyEval b = evaluate(loaded.policy, net.base_load);
  REQUIRE(a.inside);
  REQUIRE(b.inside);
  CHECK(a.region == b.region);
  CHECK(drt_test::dist(a.lmp, b.lmp) == 0.0);
}

TEST_CASE("mpqp: two builds of the same case serialize identically") {
  const NetworkCase net = load_case(fixture("net5.json"));
  const ScedQp sq = assemble(net);
  const std::string one = policy_to_json(net, build_policy(sq, net));
  const std::string two = policy_to_json(net, build_policy(sq, net));
  CHECK(one == two);
}

TEST_CASE("mpqp: tiny region budgets fail loudly") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  PolicyBuildOptions opt;
  opt.max_regions = 1;
  CHECK(drt_test::has(
      thrown<NumericsError>([&] { build_policy(sq, net, opt); }),
      "region budget exceeded"));
}

TEST_CASE("mpqp: a fully pinned load box has nothing to explore") {
  const char* txt = R"({
    "nodes": ["a", "b"], "slack": "a",
    "lines": [{"from": "a", "to": "b", "x": 1.0, "limit": 100.0}],
    "generators": [{"node": "a", "a": 1.0, "b": 0.0, "pmin": 0.0, "pmax": 10.0}],
    "base_load": [{"node": "b", "mw": 0.5}],
    "load_box": [
      {"node": "a", "lo": 0.0, "hi": 0.0},
      {"node": "b", "lo": 0.5, "hi": 0.5}
    ]
  })";
  const NetworkCase net = load_case_text(txt);
  const ScedQp sq = assemble(net);
  CHECK(drt_test::has(
      thrown<ValidationError>([&] { build_policy(sq, net); }),
      "pins every node"));
}
