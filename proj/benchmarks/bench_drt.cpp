#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "drt/mpqp.hpp"
#include "drt/network.hpp"
#include "drt/sced.hpp"
#include "drt/targeting.hpp"

using namespace drt;

namespace {

std::string fixture(const char* name) {
  return std::string(FIXTURE_DIR) + "/" + name;
}

void BM_dispatch(benchmark::State& state) {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dispatch(sq, net.base_load));
  }
}
BENCHMARK(BM_dispatch);

void BM_policy_onebus(benchmark::State& state) {
  const NetworkCase net = load_case(fixture("onebus.json"));
  const ScedQp sq = assemble(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_policy(sq, net));
  }
}
BENCHMARK(BM_policy_onebus);

void BM_policy_congested(benchmark::State& state) {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_policy(sq, net));
  }
}
BENCHMARK(BM_policy_congested);

void BM_evaluate(benchmark::State& state) {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(policy, net.base_load));
  }
}
BENCHMARK(BM_evaluate);

void BM_targeting(benchmark::State& state) {
  const NetworkCase net = load_case(fixture("ring3_congested.json"));
  const ScedQp sq = assemble(net);
  const Policy policy = build_policy(sq, net);
  TargetingSpec spec;
  spec.lambda_star = 4.0;
  spec.K = 2;
  spec.w = Eigen::VectorXd::Constant(3, 1.1);
  spec.xbar = net.base_load - net.box_lo;
  spec.base = net.base_load;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_targeting(policy, spec));
  }
}
BENCHMARK(BM_targeting);

}  // namespace

BENCHMARK_MAIN();
