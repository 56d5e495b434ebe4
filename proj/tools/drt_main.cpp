// drt: nodal price policies and demand-response targeting from the shell.
//
// Exit codes: 0 success, 1 infeasible problem instance, 2 bad input or
// numerical breakdown.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "drt/errors.hpp"
#include "drt/json_io.hpp"
#include "drt/mpqp.hpp"
#include "drt/network.hpp"
#include "drt/sced.hpp"
#include "drt/targeting.hpp"
#include "json.hpp"

namespace {

using namespace drt;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    write_atomic(out_path, text + "\n");
  }
}

int env_threads() {
  const char* s = std::getenv("DRT_THREADS");
  if (!s) return 1;
  const int t = std::atoi(s);
  return t >= 1 ? t : 1;
}

// ---- sced ----------------------------------------------------------------

struct ScedArgs {
  std::string case_path, load_path, out;
  double eps_act = 1e-7;
};

void run_sced(const ScedArgs& a) {
  const NetworkCase net = load_case(a.case_path);
  const ScedQp sced = assemble(net);
  const Eigen::VectorXd load = a.load_path.empty()
                                   ? net.base_load
                                   : load_vector_from_file(a.load_path, net);
  QpOptions qo;
  qo.eps_act = a.eps_act;
  const DispatchResult dr = dispatch(sced, load, qo);
  emit(dispatch_to_json(net, load, dr), a.out);
}

// ---- policy / policy eval --------------------------------------------------

struct PolicyArgs {
  std::string case_path, out;
  std::uint64_t seed = 0;
  bool no_unify = false;
  double min_radius = 1e-7;
  int max_iterations = 10000;
  int max_regions = 2000;
  int sample_checks = 64;
  double eps_act = 1e-7;
};

void run_policy(const PolicyArgs& a) {
  const NetworkCase net = load_case(a.case_path);
  const ScedQp sced = assemble(net);
  PolicyBuildOptions opt;
  opt.seed = a.seed;
  opt.unify = !a.no_unify;
  opt.min_radius = a.min_radius;
  opt.max_iterations = a.max_iterations;
  opt.max_regions = a.max_regions;
  opt.sample_checks = a.sample_checks;
  opt.qp.eps_act = a.eps_act;
  const Policy policy = build_policy(sced, net, opt);
  std::cerr << "policy: " << policy.regions.size() << " region(s), "
            << policy.notes.size() << " note(s)\n";
  emit(policy_to_json(net, policy), a.out);
}

struct EvalArgs {
  std::string policy_path, load_path, out;
};

void run_eval(const EvalArgs& a) {
  const LoadedPolicy lp = policy_from_file(a.policy_path);
  const Eigen::VectorXd load =
      a.load_path.empty() ? lp.net.base_load
                          : load_vector_from_file(a.load_path, lp.net);
  const PolicyEval ev = evaluate(lp.policy, load);
  nlohmann::json o;
  o["format"] = "drt-eval/1";
  o["case_hash"] = lp.hash;
  o["load"] = nlohmann::json::array();
  for (int i = 0; i < load.size(); ++i) o["load"].push_back(load(i));
  o["inside"] = ev.inside;
  if (ev.inside) {
    o["region"] = ev.region;
    o["region_tag"] = lp.policy.regions[ev.region].region.tag;
    o["lmp"] = nlohmann::json::array();
    for (int i = 0; i < ev.lmp.size(); ++i) o["lmp"].push_back(ev.lmp(i));
    o["generation"] = nlohmann::json::array();
    for (int i = 0; i < ev.generation.size(); ++i) {
      o["generation"].push_back(ev.generation(i));
    }
  }
  emit(o.dump(2), a.out);
}

// ---- target / shift / oracle ----------------------------------------------

struct TargetArgs {
  std::string policy_path, load_path, out;
  std::string weights_file, xbar_file;
  double lambda_star = 0.0;
  int budget = 1;
  double w = 1.1;
  double xbar = -1.0;  // negative: derive from the admissible box
  bool no_screen = false;
  bool no_weights = false;
  double eps_act = 1e-7;
};

TargetingSpec make_spec(const TargetArgs& a, const LoadedPolicy& lp,
                        bool shift_mode) {
  const NetworkCase& net = lp.net;
  TargetingSpec spec;
  spec.lambda_star = a.lambda_star;
  spec.K = a.budget;
  spec.base = a.load_path.empty() ? net.base_load
                                  : load_vector_from_file(a.load_path, net);
  spec.w = a.weights_file.empty()
               ? Eigen::VectorXd::Constant(net.n(), a.w)
               : node_values_from_file(a.weights_file, net, a.w);
  if (!a.xbar_file.empty()) {
    spec.xbar = node_values_from_file(a.xbar_file, net, 0.0);
  } else if (a.xbar >= 0.0) {
    spec.xbar = Eigen::VectorXd::Constant(net.n(), a.xbar);
  } else {
    // Default: as much room as the admissible box leaves at each node, never
    // more than the load itself (loads cannot go negative).
    spec.xbar.resize(net.n());
    for (int i = 0; i < net.n(); ++i) {
      spec.xbar(i) =
          shift_mode
              ? std::min(spec.base(i) - net.box_lo(i),
                         net.box_hi(i) - spec.base(i))
              : spec.base(i) - net.box_lo(i);
      spec.xbar(i) =
          std::clamp(spec.xbar(i), 0.0, std::max(spec.base(i), 0.0));
    }
  }
  return spec;
}

void run_target(const TargetArgs& a, const std::string& mode) {
  const LoadedPolicy lp = policy_from_file(a.policy_path);
  const TargetingSpec spec = make_spec(a, lp, mode == "shift");
  TargetingOptions opt;
  opt.screen = !a.no_screen;
  opt.include_weights = !a.no_weights;
  opt.qp.eps_act = a.eps_act;
  TargetingPlan plan;
  if (mode == "shift") {
    plan = solve_shifting(lp.policy, spec, opt);
  } else if (mode == "oracle") {
    plan = oracle_targeting(lp.policy, spec, opt);
  } else {
    plan = solve_targeting(lp.policy, spec, opt);
  }
  std::cerr << mode << ": " << (plan.feasible ? "ok" : "no plan") << ", "
            << plan.miqps_solved << " solve(s), " << plan.regions_screened
            << " screened, " << plan.wall_ms << " ms\n";
  emit(plan_to_json(lp.net, spec, mode, plan), a.out);
}

// ---- scenarios --------------------------------------------------------------

struct ScenarioArgs {
  std::string case_path, out;
  int count = 100;
  double sigma = 0.05;
  std::uint64_t seed = 0;
};

void run_scenarios(const ScenarioArgs& a) {
  const NetworkCase net = load_case(a.case_path);
  const auto scen = perturb_scenarios(net, a.count, a.sigma, a.seed);
  emit(scenarios_to_json(net, scen, a.sigma, a.seed), a.out);
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string policy_path, scenarios_path, out;
};

nlohmann::json report_json(const LoadedPolicy& lp,
                           const std::vector<Eigen::VectorXd>& scen) {
  const int n = lp.net.n();
  const int count = static_cast<int>(scen.size());
  std::vector<int> region_of(count, -1);
  std::vector<Eigen::VectorXd> lmp_of(count);

  // Scenario evaluations are independent; threads write to their own slots
  // so the reduction below is identical no matter the thread count.
  const int threads = std::min(env_threads(), std::max(count, 1));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      const PolicyEval ev = evaluate(lp.policy, scen[i]);
      if (ev.inside) {
        region_of[i] = ev.region;
        lmp_of[i] = ev.lmp;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, 0.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, 0.0);
  std::vector<int> region_counts(lp.policy.regions.size(), 0);
  int outside = 0, covered = 0;
  bool first = true;
  for (int i = 0; i < count; ++i) {
    if (region_of[i] < 0) {
      ++outside;
      continue;
    }
    ++region_counts[region_of[i]];
    ++covered;
    mean += lmp_of[i];
    if (first) {
      lo = lmp_of[i];
      hi = lmp_of[i];
      first = false;
    } else {
      lo = lo.cwiseMin(lmp_of[i]);
      hi = hi.cwiseMax(lmp_of[i]);
    }
  }
  if (covered > 0) mean /= covered;

  nlohmann::json o;
  o["format"] = "drt-report/1";
  o["case_hash"] = lp.hash;
  o["scenario_count"] = count;
  o["outside_domain"] = outside;
  o["region_counts"] = region_counts;
  auto arr = [](const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
  };
  o["lmp_mean"] = arr(mean);
  o["lmp_min"] = arr(lo);
  o["lmp_max"] = arr(hi);
  o["avg_lmp_mean"] = covered > 0 ? mean.sum() / n : 0.0;
  return o;
}

void run_report(const ReportArgs& a) {
  const LoadedPolicy lp = policy_from_file(a.policy_path);
  const auto scen = scenarios_from_file(a.scenarios_path, lp.net);
  emit(report_json(lp, scen).dump(2), a.out);
}

// ---- experiment --------------------------------------------------------------

struct ExperimentArgs {
  std::string case_path, out, csv;
  std::uint64_t seed = 0;
  int count = 50;
  double sigma = 0.05;
  double lambda_star = 0.0;
  int budget = 1;
};

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// One targeting solve per scenario, proposed next to the highest-LMP
// heuristic; infeasible decisions become "-" entries.
std::string sweep_csv(const NetworkCase& net, const Policy& policy,
                      const TargetingSpec& proto,
                      const std::vector<Eigen::VectorXd>& scen) {
  std::string csv =
      "scenario,feasible,total_reduction,avg_lmp_after,targeted_nodes,"
      "heuristic_feasible,heuristic_reduction,heuristic_avg_lmp_after\n";
  for (size_t i = 0; i < scen.size(); ++i) {
    TargetingSpec sp = proto;
    sp.base = scen[i];
    for (int k = 0; k < net.n(); ++k) {
      sp.xbar(k) = std::clamp(sp.base(k) - net.box_lo(k), 0.0,
                              std::max(sp.base(k), 0.0));
    }
    csv += std::to_string(i);
    try {
      const TargetingPlan plan = solve_targeting(policy, sp);
      std::string nodes;
      for (int k : plan.selected) {
        if (!nodes.empty()) nodes += "|";
        nodes += net.node_ids[k];
      }
      csv += ",yes," + csv_num(plan.x.sum()) + "," +
             csv_num(plan.avg_lmp_after) + "," + nodes;
    } catch (const InfeasibleError&) {
      csv += ",-,-,-,-";
    }
    try {
      const TargetingPlan heur = heuristic_targeting(policy, sp);
      if (heur.feasible) {
        csv += ",yes," + csv_num(heur.x.sum()) + "," +
               csv_num(heur.avg_lmp_after);
      } else {
        csv += ",-,-,-";
      }
    } catch (const InfeasibleError&) {
      csv += ",-,-,-";
    }
    csv += "\n";
  }
  return csv;
}

void run_experiment(const ExperimentArgs& a) {
  const NetworkCase net = load_case(a.case_path);
  const ScedQp sced = assemble(net);

  PolicyBuildOptions popt;
  popt.seed = a.seed;
  const Policy policy = build_policy(sced, net, popt);

  const DispatchResult base_dr = dispatch(sced, net.base_load);

  TargetArgs ta;
  ta.lambda_star = a.lambda_star;
  ta.budget = a.budget;
  LoadedPolicy lp;
  lp.net = net;
  lp.policy = policy;
  lp.hash = case_hash(net);
  const TargetingSpec tspec = make_spec(ta, lp, false);
  const TargetingSpec sspec = make_spec(ta, lp, true);

  TargetingOptions topt;
  topt.seed = a.seed;
  const TargetingPlan target = solve_targeting(policy, tspec, topt);
  const TargetingPlan heur = heuristic_targeting(policy, tspec, topt);
  const TargetingPlan shift = solve_shifting(policy, sspec, topt);

  const auto scen = perturb_scenarios(net, a.count, a.sigma, a.seed);
  const std::string csv = sweep_csv(net, policy, tspec, scen);
  if (!a.csv.empty()) write_atomic(a.csv, csv);

  nlohmann::json o;
  o["format"] = "drt-experiment/1";
  o["case_hash"] = lp.hash;
  o["policy"] = {{"regions", policy.regions.size()},
                 {"notes", policy.notes}};
  o["dispatch"] = nlohmann::json::parse(
      dispatch_to_json(net, net.base_load, base_dr));
  o["target"] = nlohmann::json::parse(plan_to_json(net, tspec, "curtail", target));
  o["heuristic"] =
      nlohmann::json::parse(plan_to_json(net, tspec, "heuristic", heur));
  o["shift"] = nlohmann::json::parse(plan_to_json(net, sspec, "shift", shift));
  o["report"] = report_json(lp, scen);
  if (a.csv.empty()) o["sweep_csv"] = csv;
  emit(o.dump(2), a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piecewise-affine LMP policy and demand-response targeting"};
  app.require_subcommand(1);

  ScedArgs sced_args;
  CLI::App* c_sced = app.add_subcommand("sced", "solve one dispatch");
  c_sced->add_option("--case", sced_args.case_path, "case JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_sced->add_option("--load", sced_args.load_path, "load JSON (default: base)");
  c_sced->add_option("--eps-act", sced_args.eps_act, "activity tolerance");
  c_sced->add_option("-o,--out", sced_args.out, "write result here");

  PolicyArgs pol_args;
  EvalArgs eval_args;
  CLI::App* c_pol =
      app.add_subcommand("policy", "build the piecewise-affine price policy");
  c_pol->add_option("--case", pol_args.case_path, "case JSON")
      ->check(CLI::ExistingFile);
  c_pol->add_option("-o,--out", pol_args.out, "write policy here");
  c_pol->add_option("--seed", pol_args.seed, "exploration seed");
  c_pol->add_flag("--no-unify", pol_args.no_unify, "keep raw regions");
  c_pol->add_option("--min-radius", pol_args.min_radius,
                    "discard slivers below this radius");
  c_pol->add_option("--max-iterations", pol_args.max_iterations,
                    "frontier pop budget");
  c_pol->add_option("--max-regions", pol_args.max_regions, "region budget");
  c_pol->add_option("--sample-checks", pol_args.sample_checks,
                    "merge sampling budget");
  c_pol->add_option("--eps-act", pol_args.eps_act, "activity tolerance");
  CLI::App* c_eval =
      c_pol->add_subcommand("eval", "evaluate a stored policy at one load");
  c_eval->add_option("--policy", eval_args.policy_path, "policy JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--load", eval_args.load_path, "load JSON (default: base)");
  c_eval->add_option("-o,--out", eval_args.out, "write result here");

  auto add_target_opts = [](CLI::App* c, TargetArgs& a, bool with_weights) {
    c->add_option("--policy", a.policy_path, "policy JSON")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--load", a.load_path, "base load JSON (default: case base)");
    c->add_option("--lambda-star", a.lambda_star, "target average LMP");
    c->add_option("-K,--budget", a.budget, "max nodes to adjust");
    c->add_option("--xbar", a.xbar, "uniform cap on per-node adjustment");
    c->add_option("--xbar-file", a.xbar_file, "per-node caps JSON");
    c->add_flag("--no-screen", a.no_screen, "solve every region MIQP");
    c->add_option("--eps-act", a.eps_act, "activity tolerance");
    c->add_option("-o,--out", a.out, "write plan here");
    if (with_weights) {
      c->add_option("--w", a.w, "uniform curtailment penalty");
      c->add_option("--weights-file", a.weights_file, "per-node penalties JSON");
      c->add_flag("--no-weights", a.no_weights, "drop the penalty term");
    }
  };
  TargetArgs target_args, shift_args, oracle_args;
  CLI::App* c_target =
      app.add_subcommand("target", "pick curtailment nodes against a target");
  add_target_opts(c_target, target_args, true);
  CLI::App* c_shift =
      app.add_subcommand("shift", "pick load-shift nodes against a target");
  add_target_opts(c_shift, shift_args, false);
  CLI::App* c_oracle = app.add_subcommand(
      "oracle", "exhaustive reference solution for small cases");
  add_target_opts(c_oracle, oracle_args, true);

  ScenarioArgs scen_args;
  CLI::App* c_scen =
      app.add_subcommand("scenarios", "draw perturbed load scenarios");
  c_scen->add_option("--case", scen_args.case_path, "case JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_scen->add_option("--count", scen_args.count, "number of scenarios");
  c_scen->add_option("--sigma", scen_args.sigma, "noise level (MW)");
  c_scen->add_option("--seed", scen_args.seed, "RNG seed");
  c_scen->add_option("-o,--out", scen_args.out, "write scenarios here");

  ReportArgs report_args;
  CLI::App* c_report =
      app.add_subcommand("report", "price statistics over scenarios");
  c_report->add_option("--policy", report_args.policy_path, "policy JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_report->add_option("--scenarios", report_args.scenarios_path,
                       "scenarios JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_report->add_option("-o,--out", report_args.out, "write report here");

  ExperimentArgs exp_args;
  CLI::App* c_exp = app.add_subcommand(
      "experiment", "end-to-end run: policy, plans, scenario report");
  c_exp->add_option("--case", exp_args.case_path, "case JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_exp->add_option("--seed", exp_args.seed, "seed for every stage");
  c_exp->add_option("--count", exp_args.count, "scenario count");
  c_exp->add_option("--sigma", exp_args.sigma, "scenario noise");
  c_exp->add_option("--lambda-star", exp_args.lambda_star, "target average LMP");
  c_exp->add_option("-K,--budget", exp_args.budget, "max nodes to adjust");
  c_exp->add_option("--csv", exp_args.csv, "write the scenario sweep here");
  c_exp->add_option("-o,--out", exp_args.out, "write bundle here");

  try {
    app.parse(argc, argv);
    if (c_sced->parsed()) run_sced(sced_args);
    if (c_pol->parsed()) {
      if (c_eval->parsed()) {
        run_eval(eval_args);
      } else {
        if (pol_args.case_path.empty()) {
          throw ParseError("policy: --case is required");
        }
        run_policy(pol_args);
      }
    }
    if (c_target->parsed()) run_target(target_args, "curtail");
    if (c_shift->parsed()) run_target(shift_args, "shift");
    if (c_oracle->parsed()) run_target(oracle_args, "oracle");
    if (c_scen->parsed()) run_scenarios(scen_args);
    if (c_report->parsed()) run_report(report_args);
    if (c_exp->parsed()) run_experiment(exp_args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
