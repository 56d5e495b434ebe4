#include "drt/json_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "drt/errors.hpp"
#include "json.hpp"

namespace drt {
namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json rowvec_json(const Eigen::RowVectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(rowvec_json(m.row(i)));
  return rows;
}

Eigen::VectorXd json_vec(const json& a, const std::string& where) {
  if (!a.is_array()) throw ParseError(where + ": expected an array");
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ParseError(where + ": expected numbers");
    v(static_cast<int>(i)) = a[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd json_mat(const json& a, const std::string& where) {
  if (!a.is_array()) throw ParseError(where + ": expected an array");
  const int rows = static_cast<int>(a.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m;
  for (int i = 0; i < rows; ++i) {
    const Eigen::VectorXd r = json_vec(a[i], where);
    if (i == 0) m.resize(rows, r.size());
    if (r.size() != m.cols()) throw ParseError(where + ": ragged matrix");
    m.row(i) = r.transpose();
  }
  return m;
}

json polytope_json(const Polytope& p) {
  json o;
  o["R"] = mat_json(p.R);
  o["r"] = vec_json(p.r);
  o["tag"] = p.tag;
  return o;
}

Polytope json_polytope(const json& o, const std::string& where) {
  Polytope p;
  p.R = json_mat(o.at("R"), where + ".R");
  p.r = json_vec(o.at("r"), where + ".r");
  if (o.contains("tag")) p.tag = o.at("tag").get<std::string>();
  if (p.R.rows() != p.r.size()) throw ParseError(where + ": R/r mismatch");
  return p;
}

const json& need(const json& o, const char* key, const std::string& where) {
  if (!o.is_object() || !o.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  return o.at(key);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(what + ": invalid JSON: " + e.what());
  }
}

}  // namespace

std::string case_to_json(const NetworkCase& net) {
  json o;
  o["name"] = net.name;
  json nodes = json::array();
  for (const std::string& id : net.node_ids) nodes.push_back(id);
  o["nodes"] = nodes;
  o["slack"] = net.node_ids[net.slack];
  json lines = json::array();
  for (const Line& ln : net.lines) {
    lines.push_back({{"from", net.node_ids[ln.from]},
                     {"to", net.node_ids[ln.to]},
                     {"x", ln.x},
                     {"limit", ln.limit}});
  }
  o["lines"] = lines;
  json gens = json::array();
  for (const Generator& g : net.gens) {
    if (g.synthetic) continue;  // reconstructed on load
    gens.push_back({{"node", net.node_ids[g.node]},
                    {"a", g.a},
                    {"b", g.b},
                    {"c", g.c},
                    {"pmin", g.pmin},
                    {"pmax", g.pmax}});
  }
  o["generators"] = gens;
  json base = json::array();
  for (int i = 0; i < net.n(); ++i) {
    base.push_back({{"node", net.node_ids[i]}, {"mw", net.base_load(i)}});
  }
  o["base_load"] = base;
  json box = json::array();
  for (int i = 0; i < net.n(); ++i) {
    box.push_back({{"node", net.node_ids[i]},
                   {"lo", net.box_lo(i)},
                   {"hi", net.box_hi(i)}});
  }
  o["load_box"] = box;
  return o.dump(2);
}

std::string case_hash(const NetworkCase& net) {
  const std::string text = case_to_json(net);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string dispatch_to_json(const NetworkCase& net,
                             const Eigen::VectorXd& load,
                             const DispatchResult& dr) {
  json o;
  o["format"] = "drt-dispatch/1";
  o["case_hash"] = case_hash(net);
  json nodes = json::array();
  for (const std::string& id : net.node_ids) nodes.push_back(id);
  o["nodes"] = nodes;
  o["load"] = vec_json(load);
  o["generation"] = vec_json(dr.generation);
  o["lmp"] = vec_json(dr.lmp);
  o["gamma"] = dr.gamma;
  o["mu_upper"] = vec_json(dr.mu_upper);
  o["mu_lower"] = vec_json(dr.mu_lower);
  o["psi_upper"] = vec_json(dr.psi_upper);
  o["psi_lower"] = vec_json(dr.psi_lower);
  o["binding"] = {{"lines_upper", dr.binding_lines_upper},
                  {"lines_lower", dr.binding_lines_lower},
                  {"gens_upper", dr.binding_gens_upper},
                  {"gens_lower", dr.binding_gens_lower}};
  o["objective"] = dr.objective;
  o["residuals"] = {{"stationarity", dr.residuals.stationarity},
                    {"primal", dr.residuals.primal},
                    {"dual", dr.residuals.dual},
                    {"complementarity", dr.residuals.complementarity}};
  return o.dump(2);
}

std::string policy_to_json(const NetworkCase& net, const Policy& policy) {
  json o;
  o["format"] = "drt-policy/1";
  o["case"] = json::parse(case_to_json(net));
  o["case_hash"] = case_hash(net);
  o["space"] = {{"n_nodes", policy.space.n_nodes},
                {"free_nodes", policy.space.free_nodes},
                {"fixed_load", vec_json(policy.space.fixed_load)}};
  o["domain"] = polytope_json(policy.domain);
  json regions = json::array();
  for (const CriticalRegion& cr : policy.regions) {
    json rj;
    rj["polytope"] = polytope_json(cr.region);
    const AffinePiece& pc = cr.piece;
    rj["piece"] = {{"base_load", vec_json(pc.base_load)},
                   {"gen0", vec_json(pc.gen0)},
                   {"gen_jac", mat_json(pc.gen_jac)},
                   {"gamma0", pc.gamma0},
                   {"gamma_jac", rowvec_json(pc.gamma_jac)},
                   {"mu0", vec_json(pc.mu0)},
                   {"mu_jac", mat_json(pc.mu_jac)},
                   {"psi0", vec_json(pc.psi0)},
                   {"psi_jac", mat_json(pc.psi_jac)},
                   {"F", mat_json(pc.F)},
                   {"g", vec_json(pc.g)},
                   {"active_set", pc.active_set}};
    regions.push_back(rj);
  }
  o["regions"] = regions;
  o["notes"] = policy.notes;
  return o.dump(2);
}

LoadedPolicy policy_from_json_text(const std::string& text) {
  const json o = parse_text(text, "policy");
  if (!o.is_object() || !o.contains("format") ||
      o.at("format") != "drt-policy/1") {
    throw ParseError("policy: not a drt-policy/1 document");
  }
  LoadedPolicy lp;
  lp.net = load_case_text(need(o, "case", "policy").dump());
  lp.hash = need(o, "case_hash", "policy").get<std::string>();
  if (lp.hash != case_hash(lp.net)) {
    throw ValidationError("policy: case_hash does not match embedded case");
  }

  const json& sp = need(o, "space", "policy");
  lp.policy.space.n_nodes = need(sp, "n_nodes", "policy.space").get<int>();
  lp.policy.space.free_nodes =
      need(sp, "free_nodes", "policy.space").get<std::vector<int>>();
  lp.policy.space.fixed_load =
      json_vec(need(sp, "fixed_load", "policy.space"), "policy.space.fixed_load");
  lp.policy.domain = json_polytope(need(o, "domain", "policy"), "policy.domain");

  const json& regions = need(o, "regions", "policy");
  if (!regions.is_array()) throw ParseError("policy.regions: expected array");
  for (size_t k = 0; k < regions.size(); ++k) {
    const std::string where = "policy.regions[" + std::to_string(k) + "]";
    const json& rj = regions[k];
    CriticalRegion cr;
    cr.region = json_polytope(need(rj, "polytope", where), where + ".polytope");
    const json& pj = need(rj, "piece", where);
    AffinePiece& pc = cr.piece;
    pc.base_load = json_vec(need(pj, "base_load", where), where + ".base_load");
    pc.gen0 = json_vec(need(pj, "gen0", where), where + ".gen0");
    pc.gen_jac = json_mat(need(pj, "gen_jac", where), where + ".gen_jac");
    pc.gamma0 = need(pj, "gamma0", where).get<double>();
    pc.gamma_jac = json_vec(need(pj, "gamma_jac", where), where + ".gamma_jac")
                       .transpose();
    pc.mu0 = json_vec(need(pj, "mu0", where), where + ".mu0");
    pc.mu_jac = json_mat(need(pj, "mu_jac", where), where + ".mu_jac");
    pc.psi0 = json_vec(need(pj, "psi0", where), where + ".psi0");
    pc.psi_jac = json_mat(need(pj, "psi_jac", where), where + ".psi_jac");
    pc.F = json_mat(need(pj, "F", where), where + ".F");
    pc.g = json_vec(need(pj, "g", where), where + ".g");
    pc.active_set = need(pj, "active_set", where).get<std::vector<int>>();
    lp.policy.regions.push_back(std::move(cr));
  }
  if (o.contains("notes")) {
    lp.policy.notes = o.at("notes").get<std::vector<std::string>>();
  }
  return lp;
}

LoadedPolicy policy_from_file(const std::string& path) {
  return policy_from_json_text(read_file(path));
}

std::string plan_to_json(const NetworkCase& net, const TargetingSpec& spec,
                         const std::string& mode, const TargetingPlan& plan) {
  json o;
  o["format"] = "drt-plan/1";
  o["case_hash"] = case_hash(net);
  o["mode"] = mode;
  o["spec"] = {{"lambda_star", spec.lambda_star},
               {"K", spec.K},
               {"w", vec_json(spec.w)},
               {"xbar", vec_json(spec.xbar)},
               {"base", vec_json(spec.base)}};
  o["feasible"] = plan.feasible;
  if (plan.feasible) {
    o["region"] = plan.region;
    o["x"] = vec_json(plan.x);
    json sel = json::array();
    for (int i : plan.selected) sel.push_back(net.node_ids[i]);
    o["selected"] = sel;
    o["objective"] = plan.objective;
    o["load_after"] = vec_json(plan.load_after);
    o["lmp_after"] = vec_json(plan.lmp_after);
    o["avg_lmp_after"] = plan.avg_lmp_after;
  }
  o["avg_lmp_before"] = plan.avg_lmp_before;
  json outcomes = json::array();
  for (const RegionOutcome& oc : plan.outcomes) {
    json oj;
    oj["region"] = oc.region;
    oj["relax_feasible"] = oc.relax_feasible;
    if (oc.relax_feasible) oj["relax_bound"] = oc.relax_bound;
    oj["screened"] = oc.screened;
    oj["miqp_solved"] = oc.miqp_solved;
    if (oc.miqp_solved) {
      oj["miqp_feasible"] = oc.miqp_feasible;
      if (oc.miqp_feasible) oj["miqp_value"] = oc.miqp_value;
      oj["bnb_nodes"] = oc.bnb_nodes;
    }
    outcomes.push_back(oj);
  }
  o["stats"] = {{"miqps_solved", plan.miqps_solved},
                {"regions_screened", plan.regions_screened},
                {"bnb_nodes", plan.bnb_nodes},
                {"outcomes", outcomes}};
  return o.dump(2);
}

std::string scenarios_to_json(const NetworkCase& net,
                              const std::vector<Eigen::VectorXd>& scenarios,
                              double sigma, std::uint64_t seed) {
  json o;
  o["format"] = "drt-scenarios/1";
  o["case_hash"] = case_hash(net);
  json nodes = json::array();
  for (const std::string& id : net.node_ids) nodes.push_back(id);
  o["nodes"] = nodes;
  o["sigma"] = sigma;
  o["seed"] = seed;
  json rows = json::array();
  for (const Eigen::VectorXd& s : scenarios) rows.push_back(vec_json(s));
  o["scenarios"] = rows;
  return o.dump(2);
}

std::vector<Eigen::VectorXd> scenarios_from_file(const std::string& path,
                                                 const NetworkCase& net) {
  const json o = parse_text(read_file(path), "scenarios");
  if (!o.is_object() || !o.contains("format") ||
      o.at("format") != "drt-scenarios/1") {
    throw ParseError("scenarios: not a drt-scenarios/1 document");
  }
  const json& rows = need(o, "scenarios", "scenarios");
  if (!rows.is_array()) throw ParseError("scenarios.scenarios: expected array");
  std::vector<Eigen::VectorXd> out;
  for (size_t i = 0; i < rows.size(); ++i) {
    Eigen::VectorXd v =
        json_vec(rows[i], "scenarios[" + std::to_string(i) + "]");
    if (v.size() != net.n()) {
      throw ValidationError("scenarios[" + std::to_string(i) +
                            "]: wrong node count");
    }
    out.push_back(std::move(v));
  }
  return out;
}

Eigen::VectorXd load_vector_from_file(const std::string& path,
                                      const NetworkCase& net) {
  const json o = parse_text(read_file(path), "load");
  Eigen::VectorXd load = net.base_load;
  const json& arr = need(o, "load", "load");
  if (!arr.is_array()) throw ParseError("load.load: expected an array");
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "load.load[" + std::to_string(i) + "]";
    const std::string id = need(arr[i], "node", where).get<std::string>();
    const auto it = net.index_of.find(id);
    if (it == net.index_of.end()) {
      throw ValidationError(where + ": unknown node '" + id + "'");
    }
    const json& mw = need(arr[i], "mw", where);
    if (!mw.is_number()) throw ParseError(where + ".mw: expected a number");
    load(it->second) = mw.get<double>();
  }
  return load;
}

Eigen::VectorXd node_values_from_file(const std::string& path,
                                      const NetworkCase& net, double fill) {
  const json o = parse_text(read_file(path), "values");
  Eigen::VectorXd v = Eigen::VectorXd::Constant(net.n(), fill);
  const json& arr = need(o, "values", "values");
  if (!arr.is_array()) throw ParseError("values.values: expected an array");
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "values.values[" + std::to_string(i) + "]";
    const std::string id = need(arr[i], "node", where).get<std::string>();
    const auto it = net.index_of.find(id);
    if (it == net.index_of.end()) {
      throw ValidationError(where + ": unknown node '" + id + "'");
    }
    const json& val = need(arr[i], "value", where);
    if (!val.is_number()) throw ParseError(where + ".value: expected a number");
    v(it->second) = val.get<double>();
  }
  return v;
}

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + tmp);
    out << text;
    out.flush();
    if (!out) throw Error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace drt
