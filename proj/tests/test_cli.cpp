#include <cmath>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "test_helpers.hpp"

using drt_test::CmdResult;
using drt_test::fixture;
using drt_test::run_cmd;
using drt_test::slurp;
using drt_test::spit;
using drt_test::tmp_path;
using nlohmann::json;

namespace {

std::string bin() { return std::string(DRT_BIN); }

std::string q(const std::string& s) { return "\"" + s + "\""; }

// Stderr of a command, with stdout discarded.
std::string stderr_of(const std::string& cmd) {
  return run_cmd("( " + cmd + " 2>&1 1>/dev/null )").out;
}

// Build a policy file once per fixture and reuse it across test cases.
std::string policy_file(const std::string& fixture_name,
                        const std::string& out_name) {
  const std::string path = tmp_path(out_name);
  const CmdResult r = run_cmd(bin() + " policy --case " +
                              q(fixture(fixture_name)) + " -o " + q(path));
  REQUIRE(r.exit_code == 0);
  return path;
}

}  // namespace

TEST_CASE("cli: bad invocations exit 2, help exits 0") {
  CHECK(run_cmd(bin()).exit_code == 2);
  CHECK(run_cmd(bin() + " frobnicate").exit_code == 2);
  CHECK(run_cmd(bin() + " sced").exit_code == 2);  // --case is required

  const CmdResult help = run_cmd(bin() + " --help");
  CHECK(help.exit_code == 0);
  for (const char* sub : {"sced", "policy", "target", "shift", "oracle",
                          "scenarios", "report", "experiment"}) {
    CHECK(drt_test::has(help.out, sub));
  }
}

TEST_CASE("cli: sced prints the dispatch as JSON") {
  const CmdResult base =
      run_cmd(bin() + " sced --case " + q(fixture("onebus.json")));
  REQUIRE(base.exit_code == 0);
  const json jb = json::parse(base.out);
  CHECK(jb["format"] == "drt-dispatch/1");
  CHECK(std::abs(jb["lmp"][0].get<double>() - 0.5) <= 1e-9);

  const std::string load = tmp_path("cli_load2.json");
  spit(load, R"({"load": [{"node": "b2", "mw": 2.0}]})");
  const CmdResult high = run_cmd(bin() + " sced --case " +
                                 q(fixture("onebus.json")) + " --load " +
                                 q(load));
  REQUIRE(high.exit_code == 0);
  const json jh = json::parse(high.out);
  CHECK(std::abs(jh["lmp"][0].get<double>() - 3.0) <= 1e-9);
  CHECK(std::abs(jh["lmp"][1].get<double>() - 3.0) <= 1e-9);
  CHECK(jh["binding"]["gens_upper"] == json::array({0}));
}

TEST_CASE("cli: sced failure modes map to distinct exit codes") {
  const std::string big = tmp_path("cli_load_big.json");
  spit(big, R"({"load": [{"node": "b2", "mw": 100.0}]})");
  const std::string cmd = bin() + " sced --case " + q(fixture("onebus.json")) +
                          " --load " + q(big);
  CHECK(run_cmd(cmd).exit_code == 1);
  CHECK(drt_test::has(stderr_of(cmd), "no feasible generation"));

  const std::string bad = tmp_path("cli_bad_case.json");
  spit(bad, "this is not json");
  CHECK(run_cmd(bin() + " sced --case " + q(bad)).exit_code == 2);
}

TEST_CASE("cli: policy writes the partition and reruns byte-identically") {
  const std::string p1 = policy_file("onebus.json", "cli_ob1.json");
  const std::string p2 = policy_file("onebus.json", "cli_ob2.json");
  const std::string t1 = slurp(p1);
  CHECK(t1 == slurp(p2));

  const json jp = json::parse(t1);
  CHECK(jp["format"] == "drt-policy/1");
  CHECK(jp["regions"].size() == 2);

  // -o keeps stdout quiet; the one-line summary goes to stderr.
  const CmdResult r = run_cmd(bin() + " policy --case " +
                              q(fixture("onebus.json")) + " -o " + q(p1));
  CHECK(r.out.empty());
  CHECK(drt_test::has(stderr_of(bin() + " policy --case " +
                                q(fixture("onebus.json")) + " -o " + q(p1)),
                      "region(s)"));
}

TEST_CASE("cli: policy eval inside and outside the domain") {
  const std::string pol = policy_file("onebus.json", "cli_ob_eval.json");
  const std::string lin = tmp_path("cli_eval_in.json");
  const std::string lout = tmp_path("cli_eval_out.json");
  spit(lin, R"({"load": [{"node": "b2", "mw": 0.5}]})");
  spit(lout, R"({"load": [{"node": "b2", "mw": 12.0}]})");

  const CmdResult in = run_cmd(bin() + " policy eval --policy " + q(pol) +
                               " --load " + q(lin));
  REQUIRE(in.exit_code == 0);
  const json ji = json::parse(in.out);
  CHECK(ji["inside"] == true);
  CHECK(ji["region"] == 0);
  CHECK(ji["region_tag"] == "R0");
  CHECK(std::abs(ji["lmp"][1].get<double>() - 0.5) <= 1e-9);

  const CmdResult out = run_cmd(bin() + " policy eval --policy " + q(pol) +
                                " --load " + q(lout));
  REQUIRE(out.exit_code == 0);  // being outside is an answer, not an error
  const json jo = json::parse(out.out);
  CHECK(jo["inside"] == false);
  CHECK_FALSE(jo.contains("lmp"));
}

TEST_CASE("cli: policy eval agrees with a fresh dispatch") {
  const std::string pol = policy_file("ring3_congested.json", "cli_r3c.json");
  const CmdResult ev = run_cmd(bin() + " policy eval --policy " + q(pol));
  const CmdResult di =
      run_cmd(bin() + " sced --case " + q(fixture("ring3_congested.json")));
  REQUIRE(ev.exit_code == 0);
  REQUIRE(di.exit_code == 0);
  const json je = json::parse(ev.out);
  const json jd = json::parse(di.out);
  REQUIRE(je["inside"] == true);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(je["lmp"][i].get<double>() - jd["lmp"][i].get<double>()) <=
          1e-6);
  }
}

TEST_CASE("cli: target plan on the single-generator case") {
  const std::string pol = policy_file("onegen.json", "cli_onegen.json");
  const std::string load = tmp_path("cli_base3.json");
  spit(load, R"({"load": [{"node": "g1", "mw": 3.0}]})");
  const std::string cmd = bin() + " target --policy " + q(pol) + " --load " +
                          q(load) +
                          " --lambda-star 2 -K 1 --xbar 2.5 --w 0.4";

  const CmdResult r = run_cmd(cmd);
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j["format"] == "drt-plan/1");
  CHECK(j["mode"] == "curtail");
  CHECK(j["feasible"] == true);
  CHECK(std::abs(j["objective"].get<double>() - 0.99) <= 1e-9);
  CHECK(std::abs(j["x"][0].get<double>() - 2.45) <= 1e-6);
  CHECK(j["selected"] == json::array({"g1"}));

  CHECK(drt_test::has(stderr_of(cmd), "curtail: ok,"));

  const CmdResult o = run_cmd(bin() + " oracle --policy " + q(pol) +
                              " --load " + q(load) +
                              " --lambda-star 2 -K 1 --xbar 2.5 --w 0.4");
  REQUIRE(o.exit_code == 0);
  const json jo = json::parse(o.out);
  CHECK(std::abs(jo["objective"].get<double>() -
                 j["objective"].get<double>()) <= 1e-9);
}

TEST_CASE("cli: an unmeetable target exits 1") {
  const std::string pol = policy_file("onegen.json", "cli_onegen_inf.json");
  const std::string load = tmp_path("cli_base3b.json");
  spit(load, R"({"load": [{"node": "g1", "mw": 3.0}]})");
  const std::string cmd = bin() + " target --policy " + q(pol) + " --load " +
                          q(load) + " --lambda-star 2 -K 1 --xbar 0";
  CHECK(run_cmd(cmd).exit_code == 1);
  CHECK(drt_test::has(stderr_of(cmd), "DR infeasible"));
}

TEST_CASE("cli: shift plan conserves energy and lowers the average") {
  const std::string pol = policy_file("ring3_congested.json", "cli_r3cs.json");
  const CmdResult r = run_cmd(bin() + " shift --policy " + q(pol) +
                              " --lambda-star 4 -K 2");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j["mode"] == "shift");
  CHECK(j["feasible"] == true);
  CHECK(std::abs(j["objective"].get<double>() - 0.3226972944849073) <= 1e-9);
  double sum = 0.0;
  for (const auto& xi : j["x"]) sum += xi.get<double>();
  CHECK(std::abs(sum) <= 1e-9);
  CHECK(j["avg_lmp_after"].get<double>() <
        j["avg_lmp_before"].get<double>() - 1e-6);
}

TEST_CASE("cli: every artifact is reproducible byte for byte") {
  const std::string cs = q(fixture("ring3_congested.json"));
  const std::string pol = policy_file("ring3_congested.json", "cli_rep.json");

  const std::string s1 = tmp_path("cli_sc1.json"), s2 = tmp_path("cli_sc2.json");
  REQUIRE(run_cmd(bin() + " scenarios --case " + cs +
                  " --count 6 --sigma 0.2 --seed 9 -o " + q(s1))
              .exit_code == 0);
  REQUIRE(run_cmd(bin() + " scenarios --case " + cs +
                  " --count 6 --sigma 0.2 --seed 9 -o " + q(s2))
              .exit_code == 0);
  CHECK(slurp(s1) == slurp(s2));
  CHECK(json::parse(slurp(s1))["format"] == "drt-scenarios/1");

  const std::string r1 = tmp_path("cli_rep1.json"),
                    r2 = tmp_path("cli_rep2.json");
  REQUIRE(run_cmd(bin() + " report --policy " + q(pol) + " --scenarios " +
                  q(s1) + " -o " + q(r1))
              .exit_code == 0);
  REQUIRE(run_cmd("DRT_THREADS=3 " + bin() + " report --policy " + q(pol) +
                  " --scenarios " + q(s1) + " -o " + q(r2))
              .exit_code == 0);
  CHECK(slurp(r1) == slurp(r2));  // thread count cannot change the numbers
  const json jr = json::parse(slurp(r1));
  CHECK(jr["format"] == "drt-report/1");
  CHECK(jr["scenario_count"] == 6);
  CHECK(jr["outside_domain"].get<int>() >= 0);

  const std::string e1 = tmp_path("cli_ex1.json"),
                    e2 = tmp_path("cli_ex2.json");
  const std::string c1 = tmp_path("cli_sw1.csv"), c2 = tmp_path("cli_sw2.csv");
  const std::string args =
      " --lambda-star 4 -K 1 --count 4 --sigma 0.15 --seed 3";
  REQUIRE(run_cmd(bin() + " experiment --case " + cs + args + " --csv " +
                  q(c1) + " -o " + q(e1))
              .exit_code == 0);
  REQUIRE(run_cmd(bin() + " experiment --case " + cs + args + " --csv " +
                  q(c2) + " -o " + q(e2))
              .exit_code == 0);
  CHECK(slurp(e1) == slurp(e2));
  CHECK(slurp(c1) == slurp(c2));

  const json je = json::parse(slurp(e1));
  CHECK(je["format"] == "drt-experiment/1");
  CHECK(std::abs(je["target"]["objective"].get<double>() -
                 1.8410323621227924) <= 1e-9);
  CHECK(je["heuristic"]["objective"].get<double>() >
        je["target"]["objective"].get<double>());
  CHECK(drt_test::has(slurp(c1),
                      "scenario,feasible,total_reduction,avg_lmp_after,"
                      "targeted_nodes,heuristic_feasible,heuristic_reduction,"
                      "heuristic_avg_lmp_after"));
}
