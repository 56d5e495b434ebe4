#include <cmath>

#include <Eigen/Dense>

#include "doctest.h"
#include "drt/errors.hpp"
#include "drt/network.hpp"
#include "drt/sced.hpp"
#include "test_helpers.hpp"

using namespace drt;
using drt_test::fixture;
using drt_test::thrown;

namespace {

void check_residuals(const DispatchResult& d, double tol = 1e-7) {
  CHECK(d.residuals.stationarity <= tol);
  CHECK(d.residuals.primal <= tol);
  CHECK(d.residuals.dual <= tol);
  CHECK(d.residuals.complementarity <= tol);
}

}  // namespace

TEST_CASE("sced: stacked inequality layout is [H; -H; I; -I]") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  const Eigen::MatrixXd A = sq.ineq_matrix();
  REQUIRE(A.rows() == 2 * sq.l() + 2 * sq.n());
  CHECK(drt_test::dist(Eigen::MatrixXd(A.topRows(1)), sq.H) == 0.0);
  CHECK(drt_test::dist(Eigen::MatrixXd(A.middleRows(1, 1)),
                       Eigen::MatrixXd(-sq.H)) == 0.0);
  CHECK(drt_test::dist(Eigen::MatrixXd(A.middleRows(2, 2)),
                       Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2))) ==
        0.0);
  CHECK(drt_test::dist(Eigen::MatrixXd(A.bottomRows(2)),
                       Eigen::MatrixXd(-Eigen::MatrixXd::Identity(2, 2))) ==
        0.0);

  Eigen::VectorXd load(2);
  load << 0.0, 0.5;
  const Eigen::VectorXd b = sq.ineq_rhs(load);
  CHECK(b(0) == doctest::Approx(100.0 - 0.5).epsilon(1e-12));  // f + H l
  CHECK(b(1) == doctest::Approx(100.0 + 0.5).epsilon(1e-12));
  CHECK(b(2) == 1.0);   // pmax
  CHECK(b(3) == 10.0);
  CHECK(b(4) == 0.0);   // -pmin
  CHECK(b(5) == 0.0);
}

TEST_CASE("sced: one-bus dispatch, cheap unit first") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  Eigen::VectorXd load(2);
  load << 0.0, 0.5;
  const DispatchResult d = dispatch(sq, load);
  CHECK(d.generation(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(d.generation(1) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d.lmp(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(d.lmp(1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(d.gamma == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(d.objective == doctest::Approx(0.125).epsilon(1e-9));
  // The idle expensive unit is held down by its capacity dual:
  // psi_lower = b2 - lmp = 2 - 0.5.
  CHECK(d.psi_lower(1) == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(d.active_set == std::vector<int>{5});
  CHECK(d.binding_gens_lower == std::vector<int>{1});
  check_residuals(d);
}

TEST_CASE("sced: one-bus dispatch with the cheap unit at its limit") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  Eigen::VectorXd load(2);
  load << 0.0, 2.0;
  const DispatchResult d = dispatch(sq, load);
  CHECK(d.generation(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(d.generation(1) == doctest::Approx(1.0).epsilon(1e-9));
  // Marginal unit is now the expensive one: lmp = a2 * g2 + b2 = 3.
  CHECK(d.lmp(0) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(d.lmp(1) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(d.objective == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(d.active_set == std::vector<int>{2});
  CHECK(d.binding_gens_upper == std::vector<int>{0});
  check_residuals(d);
}

TEST_CASE("sced: uncongested ring prices everything at the system marginal") {
  const NetworkCase net = load_case(fixture("ring3.json"));
  const ScedQp sq = assemble(net);
  const DispatchResult d = dispatch(sq, net.base_load);
  // 1/a harmonic split of the 3 MW total: gamma solves
  // sum_i (gamma - b_i)/a_i = 3  =>  gamma = 16/7.
  for (int i = 0; i < 3; ++i) {
    CHECK(d.lmp(i) == doctest::Approx(16.0 / 7.0).epsilon(1e-9));
  }
  CHECK(d.generation(0) == doctest::Approx(16.0 / 7.0).epsilon(1e-9));
  CHECK(d.generation(1) == doctest::Approx(9.0 / 14.0).epsilon(1e-9));
  CHECK(d.generation(2) == doctest::Approx(1.0 / 14.0).epsilon(1e-9));
  CHECK(d.binding_lines_upper.empty());
  CHECK(d.binding_lines_lower.empty());
  check_residuals(d);
}

TEST_CASE("sced: congestion separates nodal prices") {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const DispatchResult d = dispatch(sq, net.base_load);
  CHECK(d.lmp(0) == doctest::Approx(5.0887096774193532).epsilon(1e-10));
  CHECK(d.lmp(1) == doctest::Approx(3.5967741935483977).epsilon(1e-10));
  CHECK(d.lmp(2) == doctest::Approx(4.7903225806451619).epsilon(1e-10));
  CHECK(d.gamma == doctest::Approx(5.0887096774193532).epsilon(1e-10));
  CHECK(d.generation(0) == doctest::Approx(1.0887096774193536).epsilon(1e-9));
  CHECK(d.generation(1) == doctest::Approx(0.25967741935483979).epsilon(1e-9));
  CHECK(d.generation(2) == doctest::Approx(2.9516129032258074).epsilon(1e-9));
  CHECK(d.objective == doctest::Approx(18.812298387096778).epsilon(1e-10));
  CHECK(d.mu_lower(0) == doctest::Approx(2.6854838709677207).epsilon(1e-9));
  CHECK(d.binding_lines_lower == std::vector<int>{0});
  CHECK(d.active_set == std::vector<int>{3});
  // lmp = gamma 1 - H'(mu_up - mu_low) must hold exactly.
  const Eigen::VectorXd recon =
      Eigen::VectorXd::Constant(3, d.gamma) -
      sq.H.transpose() * (d.mu_upper - d.mu_lower);
  CHECK(drt_test::dist(recon, d.lmp) <= 1e-9);
  check_residuals(d);
}

TEST_CASE("sced: lmp equals the marginal cost of serving one more MW") {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const DispatchResult d0 = dispatch(sq, net.base_load);
  const double h = 1e-6;
  for (int i = 0; i < net.n(); ++i) {
    Eigen::VectorXd up = net.base_load, dn = net.base_load;
    up(i) += h;
    dn(i) -= h;
    const double fd =
        (dispatch(sq, up).objective - dispatch(sq, dn).objective) / (2 * h);
    CHECK(std::abs(fd - d0.lmp(i)) <= 1e-4);
  }
}

TEST_CASE("sced: load beyond total capacity is infeasible") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  Eigen::VectorXd load(2);
  load << 0.0, 50.0;
  CHECK(drt_test::has(
      thrown<InfeasibleError>([&] { dispatch(sq, load); }),
      "no feasible generation"));
}

TEST_CASE("sced: load vector of the wrong length is rejected") {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  const Eigen::VectorXd load = Eigen::VectorXd::Zero(3);
  CHECK(drt_test::has(thrown<ValidationError>([&] { dispatch(sq, load); }),
                      "load length mismatch"));
  CHECK(drt_test::has(thrown<ValidationError>([&] { sq.ineq_rhs(load); }),
                      "load length mismatch"));
}

TEST_CASE("sced: load-only nodes with synthetic units dispatch cleanly") {
  // The synthetic unit is pinned by pmin == pmax == 0, which puts an
  // opposing +/- row pair into the QP; this must not upset the solver.
  const char* txt = R"({
    "nodes": ["a", "b"], "slack": "a",
    "lines": [{"from": "a", "to": "b", "x": 1.0, "limit": 100.0}],
    "generators": [{"node": "a", "a": 1.0, "b": 0.0, "pmin": 0.0, "pmax": 10.0}],
    "base_load": [{"node": "b", "mw": 0.5}]
  })";
  const NetworkCase net = load_case_text(txt);
  const ScedQp sq = assemble(net);
  const DispatchResult d = dispatch(sq, net.base_load);
  CHECK(d.generation(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(d.generation(1)) <= 1e-9);
  CHECK(d.lmp(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(d.lmp(1) == doctest::Approx(0.5).epsilon(1e-9));
  check_residuals(d);
}

TEST_CASE("sced: dispatch is deterministic") {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const DispatchResult a = dispatch(sq, net.base_load);
  const DispatchResult b = dispatch(sq, net.base_load);
  CHECK(a.generation == b.generation);
  CHECK(a.lmp == b.lmp);
  CHECK(a.active_set == b.active_set);
}
